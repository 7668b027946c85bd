//! Small numerical helpers shared by the diagnostics and inequality modules.
//!
//! The entropy and gap functionals are differences of nearly equal sums once a
//! trajectory approaches equilibrium, so plain `powf` and naive accumulation
//! lose most of the signal to rounding. The helpers here keep those
//! evaluations accurate to a few ulp of the *result* rather than of the
//! operands.

/// Computes s^p - 1 without cancellation for s near 1.
///
/// For |s - 1| < 0.5 the identity s^p - 1 = expm1(p ln(1 + (s-1))) is used,
/// which is accurate to a few ulp of the small result. Away from 1 the direct
/// form is fine. Requires s >= 0.
pub fn powm1(s: f64, p: f64) -> f64 {
    debug_assert!(s >= 0.0, "powm1 domain: s = {s}");
    let e = s - 1.0;
    if e.abs() < 0.5 {
        (p * e.ln_1p()).exp_m1()
    } else {
        s.powf(p) - 1.0
    }
}

/// Computes (1 + e)^p - 1 from the deviation e itself.
///
/// The companion to [`powm1`] for callers that hold the deviation rather than
/// the ratio. Forming 1 + e first would round to exactly 1 whenever |e| drops
/// below eps/2, silently discarding the leading term p e, which near a
/// fixed point is the entire answer. Requires e >= -1.
pub fn pow1pm1(e: f64, p: f64) -> f64 {
    debug_assert!(e >= -1.0, "pow1pm1 domain: e = {e}");
    if e.abs() < 0.5 {
        (p * e.ln_1p()).exp_m1()
    } else {
        (1.0 + e).powf(p) - 1.0
    }
}

/// Neumaier's compensated summation. Error is O(eps) of the sum of absolute
/// values instead of growing with the term count, which matters when summing
/// tens of thousands of near-cancelling contributions.
#[derive(Debug, Clone, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powm1_matches_direct_far_from_one() {
        for &(s, p) in &[(0.0_f64, 2.0), (0.2, 3.0), (4.0, 1.5), (71.0, 3.0)] {
            let direct = s.powf(p) - 1.0;
            let got = powm1(s, p);
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "powm1({s}, {p}) = {got}, direct {direct}"
            );
        }
    }

    #[test]
    fn powm1_accurate_near_one() {
        // (1+e)^p - 1 = p e + p(p-1)/2 e^2 + O(e^3); at e = 1e-9 the direct
        // form carries only ~7 good digits while powm1 keeps full precision.
        let s = 1.0 + 1e-9;
        let p = 3.0;
        let e = s - 1.0; // the representable perturbation actually stored
        let expect = p * e + p * (p - 1.0) / 2.0 * e * e;
        let got = powm1(s, p);
        assert!(
            (got - expect).abs() <= 1e-15 * expect,
            "powm1 near 1: {got} vs {expect}"
        );
    }

    #[test]
    fn pow1pm1_keeps_deviations_below_half_ulp_of_one() {
        // 1 + e rounds to 1.0 here, so any path through powm1 returns 0 and
        // loses the p e term entirely.
        let e = -3.459e-17;
        let p = 3.0;
        assert_eq!(powm1(1.0 + e, p), 0.0);
        let got = pow1pm1(e, p);
        let expect = p * e;
        assert!(
            (got - expect).abs() <= 1e-15 * expect.abs(),
            "pow1pm1({e}, {p}) = {got}, expect {expect}"
        );
    }

    #[test]
    fn pow1pm1_agrees_with_powm1_on_moderate_deviations() {
        // Only deviations well away from zero: for tiny e the rounding of
        // 1 + e perturbs powm1's argument, and pow1pm1 is the accurate one.
        for &(e, p) in &[(0.0_f64, 3.0), (0.3, 2.5), (2.0, 3.0), (-0.9, 2.0)] {
            let want = powm1(1.0 + e, p);
            let got = pow1pm1(e, p);
            assert!(
                (got - want).abs() <= 1e-14 * want.abs().max(1e-300),
                "pow1pm1({e}, {p}) = {got}, powm1 gives {want}"
            );
        }
        assert_eq!(pow1pm1(-1.0, 2.0), -1.0);
        // Small-deviation accuracy against the series directly.
        let (e, p) = (1e-9, 3.0);
        let expect = p * e + p * (p - 1.0) / 2.0 * e * e;
        let got = pow1pm1(e, p);
        assert!(
            (got - expect).abs() <= 1e-15 * expect,
            "pow1pm1 near 0: {got} vs {expect}"
        );
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // 1 + 1e-16 repeated: naive summation drops every increment.
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1000.0 * 1e-16).abs() < 1e-19);
    }

    proptest::proptest! {
        #[test]
        fn prop_powm1_matches_direct_form_away_from_one(
            s in 0.01f64..100.0,
            p in 1.0f64..5.0,
        ) {
            proptest::prop_assume!((s - 1.0).abs() > 0.1);
            let direct = s.powf(p) - 1.0;
            let got = powm1(s, p);
            let scale = direct.abs().max(1.0);
            proptest::prop_assert!((got - direct).abs() <= 1e-12 * scale);
        }
    }
}
