//! Implicit time integration: banded linear algebra, damped Newton, and the
//! outer stepping loop with diagnostics recording.
//!
//! Each backward Euler step solves R(x) = 0 with Newton's method. The
//! Jacobian couples a field cell only to its four neighbours and, on the
//! bottom row, to the road cell beneath it, so interleaving each column's
//! road unknown with its field column gives a band matrix of half-bandwidth
//! ny + 1; one LU factorization per Newton iteration is the dominant cost of
//! a run. Failed steps retry with a halved step size a bounded number of
//! times before the run reports an abort.

use crate::diagnostics::{self, Equilibrium, Record};
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::mesh::{Mesh, State};
use crate::model::{Geometry, InitialData, Params};
use crate::scheme::{jacobian, residual, JacobianMatrix};
use crate::tolerances;

/// Maps the flattened unknown ordering (field row-major, then road) to the
/// column-interleaved ordering road(i), field(i, 0), .., field(i, ny - 1)
/// that makes the Jacobian banded with kl = ku = ny + 1.
fn band_permutation(nx: usize, ny: usize) -> Vec<usize> {
    let mut perm = vec![0; nx * ny + nx];
    for i in 0..nx {
        perm[nx * ny + i] = i * (ny + 1);
        for j in 0..ny {
            perm[j * nx + i] = i * (ny + 1) + 1 + j;
        }
    }
    perm
}

/// Solves J delta = rhs by banded LU with partial pivoting, then verifies
/// the residual and attempts one round of iterative refinement before giving
/// up. The verification threshold is [`tolerances::LINSOLVE_REL`] relative
/// to the right-hand side.
pub fn solve_linear(jac: &JacobianMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(rhs.len(), jac.n);
    let (nx, ny) = (jac.nx, jac.ny);
    let perm = band_permutation(nx, ny);
    let half_band = ny + 1;
    let mut band = BandMatrix::zeros(jac.n, half_band, half_band);
    for row in 0..jac.n {
        for k in jac.row_ptr[row]..jac.row_ptr[row + 1] {
            band.set(perm[row], perm[jac.col_idx[k]], jac.values[k]);
        }
    }
    let lu = band.factor()?;

    let mut b = vec![0.0; jac.n];
    for (row, &value) in rhs.iter().enumerate() {
        b[perm[row]] = value;
    }
    lu.solve_in_place(&mut b);
    let mut delta = vec![0.0; jac.n];
    for row in 0..jac.n {
        delta[row] = b[perm[row]];
    }

    let rhs_norm = rhs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let defect_norm = |d: &[f64]| -> f64 {
        let jd = jac.matvec(d);
        jd.iter()
            .zip(rhs)
            .fold(0.0_f64, |m, (&a, &b)| m.max((b - a).abs()))
    };
    let tol = tolerances::LINSOLVE_REL * rhs_norm.max(f64::MIN_POSITIVE);
    if defect_norm(&delta) <= tol {
        return Ok(delta);
    }
    // One refinement pass with the same factorization.
    let jd = jac.matvec(&delta);
    let mut correction = vec![0.0; jac.n];
    for row in 0..jac.n {
        correction[perm[row]] = rhs[row] - jd[row];
    }
    lu.solve_in_place(&mut correction);
    for row in 0..jac.n {
        delta[row] += correction[perm[row]];
    }
    let defect = defect_norm(&delta);
    if defect <= tol {
        Ok(delta)
    } else {
        Err(Error::Linear(format!(
            "linear solve defect {defect:.3e} exceeds {tol:.3e} after refinement"
        )))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// Convergence threshold on the residual norm scaled by max(1, |x|_inf).
    pub tol: f64,
    pub max_iter: usize,
    /// Halve the update until the residual decreases (plain Newton if false).
    pub damping: bool,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: tolerances::NEWTON_TOL,
            max_iter: tolerances::NEWTON_MAX_ITER,
            damping: true,
            max_halvings: tolerances::NEWTON_MAX_HALVINGS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub iters: usize,
    /// Scaled residual norm before each iteration and after the last.
    pub residual_history: Vec<f64>,
    pub linear_solves: usize,
    pub halvings: usize,
    /// Smallest entry of the accepted state.
    pub min_entry: f64,
}

fn scaled_residual_norm(x: &State, old: &State, dt: f64, mesh: &Mesh, params: &Params) -> f64 {
    let r = residual(x, old, dt, mesh, params);
    let rn = r.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let xn = x
        .v
        .iter()
        .chain(x.u.iter())
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    rn / xn.max(1.0)
}

/// One backward Euler step from `old` over `dt`, solved by damped Newton
/// starting from the previous state. Converges when the scaled residual norm
/// drops below the configured tolerance; a state already at a root returns
/// after zero iterations.
pub fn newton_step(
    old: &State,
    dt: f64,
    mesh: &Mesh,
    params: &Params,
    cfg: &NewtonConfig,
) -> Result<(State, StepReport)> {
    let mut x = State { t: old.t + dt, v: old.v.clone(), u: old.u.clone() };
    let mut report = StepReport {
        iters: 0,
        residual_history: Vec::new(),
        linear_solves: 0,
        halvings: 0,
        min_entry: f64::INFINITY,
    };
    let mut res_norm = scaled_residual_norm(&x, old, dt, mesh, params);
    report.residual_history.push(res_norm);

    while res_norm > cfg.tol {
        if report.iters >= cfg.max_iter {
            return Err(Error::Newton(format!(
                "no convergence in {} iterations at t = {:.6}, dt = {dt:.3e}; scaled residual {res_norm:.3e}",
                cfg.max_iter, old.t
            )));
        }
        let jac = jacobian(&x, dt, mesh, params);
        let r = residual(&x, old, dt, mesh, params);
        let delta = solve_linear(&jac, &r)?;
        report.linear_solves += 1;

        let apply = |s: f64| -> State {
            let mut trial = x.clone();
            for (xi, di) in trial.v.iter_mut().zip(&delta[..mesh.n_field()]) {
                *xi -= s * di;
            }
            for (xi, di) in trial.u.iter_mut().zip(&delta[mesh.n_field()..]) {
                *xi -= s * di;
            }
            trial
        };
        let mut s = 1.0;
        let mut best = apply(s);
        let mut best_norm = scaled_residual_norm(&best, old, dt, mesh, params);
        if cfg.damping {
            let mut halvings = 0;
            while best_norm >= res_norm && halvings < cfg.max_halvings {
                s *= 0.5;
                halvings += 1;
                let trial = apply(s);
                let trial_norm = scaled_residual_norm(&trial, old, dt, mesh, params);
                if trial_norm < best_norm {
                    best = trial;
                    best_norm = trial_norm;
                }
            }
            report.halvings += halvings;
        }
        // Accept the best candidate even without a decrease; the iteration
        // cap turns persistent stagnation into an error.
        x = best;
        res_norm = best_norm;
        report.iters += 1;
        report.residual_history.push(res_norm);
    }

    report.min_entry = x
        .v
        .iter()
        .chain(x.u.iter())
        .fold(f64::INFINITY, |m, &v| m.min(v));
    Ok((x, report))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    /// The step at time `t` failed even after exhausting step halvings.
    Aborted { t: f64, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub eq: Equilibrium,
    pub final_state: State,
    pub outcome: RunOutcome,
    /// Smallest state entry seen across all accepted steps.
    pub min_entry: f64,
    /// Number of step-size halvings forced by failed Newton solves.
    pub retries: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    pub newton: NewtonConfig,
    /// Record diagnostics every this many outer steps (the initial state and
    /// the final step are always recorded).
    pub record_stride: usize,
}

/// Integrates the system from projected initial data to `t_end`, recording
/// diagnostics on the stride grid. The equilibrium is fixed from the
/// discrete conserved quantity of the projected data, so recorded entropies
/// refer to the exact limit of the discrete dynamics. A step that fails
/// after all retries ends the run early with partial records rather than an
/// error; hard setup failures (bad data, singular systems) are errors.
pub fn run(
    mesh: &Mesh,
    params: &Params,
    initial: &InitialData,
    opts: &RunOptions,
) -> Result<RunOutput> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::Config(format!("end time must be positive, got {}", opts.t_end)));
    }
    if opts.record_stride == 0 {
        return Err(Error::Config("record stride must be at least 1".into()));
    }
    let mut state = mesh.project_initial(initial);
    state.t = 0.0;
    let conserved = if params.alpha == params.beta {
        mesh.mass(&state)
    } else {
        mesh.weighted_mass(&state, params.alpha, params.beta)
    };
    let eq = diagnostics::steady_state(params, &mesh.geometry, conserved)?;

    let (first, mut min_entry) = diagnostics::measure(&state, &eq, mesh, params, 0);
    let mut records = vec![first];
    let mut retries = 0;
    let mut outcome = RunOutcome::Completed;
    let mut outer_step = 0_usize;

    'outer: while opts.t_end - state.t > 1e-12 * opts.t_end {
        let target = (state.t + opts.dt).min(opts.t_end);
        let mut sub_dt = target - state.t;
        let mut halvings_here = 0;
        let mut iters_this_step = 0;
        while target - state.t > 1e-12 * opts.t_end {
            let dt_now = sub_dt.min(target - state.t);
            match newton_step(&state, dt_now, mesh, params, &opts.newton) {
                Ok((next, report)) => {
                    iters_this_step += report.iters;
                    min_entry = min_entry.min(report.min_entry);
                    state = next;
                }
                Err(err) => {
                    retries += 1;
                    halvings_here += 1;
                    if halvings_here > tolerances::STEP_RETRY_CAP {
                        outcome = RunOutcome::Aborted { t: state.t, reason: err.to_string() };
                        break 'outer;
                    }
                    sub_dt *= 0.5;
                }
            }
        }
        outer_step += 1;
        let at_end = opts.t_end - state.t <= 1e-12 * opts.t_end;
        if outer_step.is_multiple_of(opts.record_stride) || at_end {
            let (record, min) = diagnostics::measure(&state, &eq, mesh, params, iters_this_step);
            min_entry = min_entry.min(min);
            records.push(record);
        }
    }
    if let RunOutcome::Aborted { .. } = outcome {
        let (record, min) = diagnostics::measure(&state, &eq, mesh, params, 0);
        min_entry = min_entry.min(min);
        records.push(record);
    }

    Ok(RunOutput { records, eq, final_state: state, outcome, min_entry, retries })
}

/// High-order reference trajectory for the space-free reduction: a single
/// field cell of depth L over a single road cell, where only the exchange
/// acts and the dynamics reduce to
///
///   dv/dt = alpha (mu0 u^beta - nu0 v^alpha) / L,
///   du/dt = beta (nu0 v^alpha - mu0 u^beta).
///
/// Classical RK4 with fixed step; returns (t, v, u) triples including the
/// initial condition. The rates are written out directly so this path shares
/// no code with the implicit scheme it serves as an oracle for.
pub fn reference_ode_solve(
    params: &Params,
    geom: &Geometry,
    v0: f64,
    u0: f64,
    dt: f64,
    t_end: f64,
) -> Vec<(f64, f64, f64)> {
    assert!(dt > 0.0 && t_end >= 0.0);
    let l = geom.l;
    let rhs = |v: f64, u: f64| -> (f64, f64) {
        let ex = params.mu0 * u.max(0.0).powf(params.beta)
            - params.nu0 * v.max(0.0).powf(params.alpha);
        (params.alpha * ex / l, -params.beta * ex)
    };
    let n = (t_end / dt).round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let (mut v, mut u) = (v0, u0);
    out.push((0.0, v, u));
    for k in 0..n {
        let (k1v, k1u) = rhs(v, u);
        let (k2v, k2u) = rhs(v + 0.5 * dt * k1v, u + 0.5 * dt * k1u);
        let (k3v, k3u) = rhs(v + 0.5 * dt * k2v, u + 0.5 * dt * k2u);
        let (k4v, k4u) = rhs(v + dt * k3v, u + dt * k3u);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        out.push(((k + 1) as f64 * dt, v, u));
    }
    out
}

/// Backward Euler trajectory of the same space-free reduction, driven
/// through the full Newton machinery on a 1 x 1 mesh. Returns (t, v, u)
/// triples at every step.
pub fn be_scalar_trajectory(
    params: &Params,
    geom: &Geometry,
    v0: f64,
    u0: f64,
    dt: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    let mesh = Mesh::build(*geom, 1, 1)?;
    let mut state = State { t: 0.0, v: vec![v0], u: vec![u0] };
    let cfg = NewtonConfig::default();
    let n = (t_end / dt).round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, v0, u0));
    for k in 0..n {
        let (next, _) = newton_step(&state, dt, &mesh, params, &cfg)?;
        state = next;
        out.push(((k + 1) as f64 * dt, state.v[0], state.u[0]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, FieldPiece, RoadPiece};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_params(alpha: f64, beta: f64) -> Params {
        Params::new(alpha, beta, 1.0, 1.0, 1.0, 5.0).unwrap()
    }

    fn random_positive_state(mesh: &Mesh, rng: &mut ChaCha8Rng) -> State {
        let mut s = State::zeros(mesh);
        for x in s.v.iter_mut().chain(s.u.iter_mut()) {
            *x = rng.gen_range(0.1..5.0);
        }
        s
    }

    #[test]
    fn banded_solve_matches_dense_oracle_on_real_jacobians() {
        let (geom, _) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 8, 4).unwrap();
        let params = reference_params(2.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..5 {
            let state = random_positive_state(&mesh, &mut rng);
            let jac = jacobian(&state, 0.1, &mesh, &params);
            let n = jac.n;
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for row in 0..n {
                for k in jac.row_ptr[row]..jac.row_ptr[row + 1] {
                    dense[(row, jac.col_idx[k])] = jac.values[k];
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let delta = solve_linear(&jac, &rhs).unwrap();
            let oracle = dense
                .full_piv_lu()
                .solve(&DVector::from_column_slice(&rhs))
                .unwrap();
            let scale = oracle.amax().max(1e-30);
            for row in 0..n {
                assert!(
                    (delta[row] - oracle[row]).abs() <= 1e-9 * scale,
                    "row {row}: {} vs {}",
                    delta[row],
                    oracle[row]
                );
            }
        }
    }

    #[test]
    fn newton_converges_in_one_iteration_for_linear_rates() {
        // alpha = beta = 1 makes the residual affine in the unknowns.
        let (geom, data) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 10, 5).unwrap();
        let params = Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 5.0).unwrap();
        let state = mesh.project_initial(&data);
        let (_, report) = newton_step(&state, 0.5, &mesh, &params, &NewtonConfig::default()).unwrap();
        assert_eq!(report.iters, 1, "history {:?}", report.residual_history);
    }

    #[test]
    fn newton_needs_no_iterations_at_equilibrium() {
        let (geom, _) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 6, 3).unwrap();
        let params = reference_params(2.0, 2.0);
        let eq = diagnostics::steady_state(&params, &geom, 2500.0).unwrap();
        let mut state = State::zeros(&mesh);
        state.v.fill(eq.v_inf);
        state.u.fill(eq.u_inf);
        let (next, report) = newton_step(&state, 1.0, &mesh, &params, &NewtonConfig::default()).unwrap();
        assert_eq!(report.iters, 0);
        assert_eq!(next.v, state.v);
        assert_eq!(next.u, state.u);
    }

    #[test]
    fn newton_residuals_collapse_superlinearly() {
        let (geom, data) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 20, 10).unwrap();
        let params = reference_params(2.0, 2.0);
        let state = mesh.project_initial(&data);
        let (_, report) = newton_step(&state, 0.5, &mesh, &params, &NewtonConfig::default()).unwrap();
        let h = &report.residual_history;
        assert!(h.len() >= 3, "history {h:?}");
        for w in h.windows(2) {
            assert!(w[1] < w[0], "history not decreasing: {h:?}");
        }
        let last_ratio = h[h.len() - 1] / h[h.len() - 2];
        assert!(last_ratio <= 1e-3, "tail contraction too weak: {h:?}");
        assert!(report.iters <= 8, "too many iterations: {}", report.iters);
    }

    fn constant_initial(value_field: f64, value_road: f64, geom: &Geometry) -> InitialData {
        InitialData {
            field: vec![FieldPiece {
                x_intervals: vec![[geom.x_min, geom.x_max]],
                y_interval: [0.0, geom.l],
                value: value_field,
            }],
            road: vec![RoadPiece {
                x_intervals: vec![[geom.x_min, geom.x_max]],
                value: value_road,
            }],
        }
    }

    #[test]
    fn run_from_equilibrium_stays_put() {
        // With alpha = beta and mu0 = nu0 the balanced constant state is
        // v = u, and constant data at that value is its own equilibrium.
        let (geom, _) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 5, 4).unwrap();
        let params = Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let initial = constant_initial(2.0, 2.0, &geom);
        let opts = RunOptions {
            dt: 0.5,
            t_end: 5.0,
            newton: NewtonConfig::default(),
            record_stride: 1,
        };
        let out = run(&mesh, &params, &initial, &opts).unwrap();
        assert_eq!(out.outcome, RunOutcome::Completed);
        for r in &out.records {
            assert!(r.h.abs() <= 1e-18, "entropy moved: {r:?}");
            assert_eq!(r.newton_iters, 0);
        }
        assert!(out.final_state.v.iter().all(|&v| v == 2.0));
        assert!(out.final_state.u.iter().all(|&u| u == 2.0));
    }

    #[test]
    fn short_run_conserves_mass_and_entropy_direction() {
        let (geom, data) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 12, 6).unwrap();
        let params = reference_params(2.0, 2.0);
        let opts = RunOptions {
            dt: 0.5,
            t_end: 6.0,
            newton: NewtonConfig::default(),
            record_stride: 1,
        };
        let out = run(&mesh, &params, &data, &opts).unwrap();
        assert_eq!(out.outcome, RunOutcome::Completed);
        assert_eq!(out.records.len(), 13);
        let m0 = out.records[0].mass;
        for r in &out.records {
            assert!((r.mass - m0).abs() <= 1e-8 * m0, "mass drifted: {} vs {m0}", r.mass);
        }
        for w in out.records.windows(2) {
            assert!(
                w[1].h <= w[0].h * (1.0 + 1e-12),
                "entropy increased: {} -> {}",
                w[0].h,
                w[1].h
            );
        }
        assert!(out.min_entry >= tolerances::NONNEG_FLOOR);
        let report = diagnostics::check_invariants(&out.records, &params, out.min_entry);
        assert!(report.all_ok(), "{report:?}");
    }

    #[test]
    fn mixed_exponent_run_conserves_weighted_mass() {
        let (geom, data) = preset(1).unwrap();
        let mesh = Mesh::build(geom, 10, 5).unwrap();
        let params = reference_params(2.0, 3.0);
        let opts = RunOptions {
            dt: 0.25,
            t_end: 3.0,
            newton: NewtonConfig::default(),
            record_stride: 2,
        };
        let out = run(&mesh, &params, &data, &opts).unwrap();
        assert_eq!(out.outcome, RunOutcome::Completed);
        let w0 = out.records[0].weighted_mass;
        for r in &out.records {
            assert!(
                (r.weighted_mass - w0).abs() <= 1e-9 * w0,
                "weighted mass drifted: {} vs {w0}",
                r.weighted_mass
            );
        }
    }

    #[test]
    fn record_stride_keeps_first_and_last() {
        let (geom, data) = preset(2).unwrap();
        let mesh = Mesh::build(geom, 6, 3).unwrap();
        let params = reference_params(2.0, 2.0);
        let opts = RunOptions {
            dt: 0.5,
            t_end: 5.0,
            newton: NewtonConfig::default(),
            record_stride: 4,
        };
        let out = run(&mesh, &params, &data, &opts).unwrap();
        // Steps at stride 4 of 10 outer steps: records at t = 0, 2, 4, 5.
        let times: Vec<f64> = out.records.iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 4);
        assert_eq!(times[0], 0.0);
        assert!((times[1] - 2.0).abs() < 1e-9);
        assert!((times[2] - 4.0).abs() < 1e-9);
        assert!((times[3] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn reference_ode_preserves_weighted_invariant() {
        // (L / alpha) v + (1 / beta) u is a linear invariant of the exchange
        // field, and RK4 preserves linear invariants to rounding.
        let (geom, _) = preset(1).unwrap();
        let params = reference_params(2.0, 3.0);
        let path = reference_ode_solve(&params, &geom, 2.0, 3.0, 1e-3, 2.0);
        let w = |v: f64, u: f64| geom.l / params.alpha * v + u / params.beta;
        let w0 = w(2.0, 3.0);
        for &(_, v, u) in &path {
            assert!((w(v, u) - w0).abs() <= 1e-10 * w0, "invariant drifted at ({v}, {u})");
        }
    }

    #[test]
    fn reference_ode_relaxes_to_balance() {
        let (geom, _) = preset(1).unwrap();
        let params = reference_params(2.0, 2.0);
        let path = reference_ode_solve(&params, &geom, 0.0, 5.0, 1e-3, 200.0);
        let &(_, v, u) = path.last().unwrap();
        let balance = params.nu0 * v * v - params.mu0 * u * u;
        assert!(balance.abs() <= 1e-8, "rate balance residual {balance}");
    }

    #[test]
    fn backward_euler_converges_at_first_order() {
        // Error against a fine RK4 reference halves with the step, and the
        // dt = 1e-3 trajectory is within one percent everywhere.
        let (geom, _) = preset(1).unwrap();
        let params = reference_params(2.0, 2.0);
        let t_end = 1.0;
        let fine = reference_ode_solve(&params, &geom, 0.0, 5.0, 1e-5, t_end);
        let reference_at = |t: f64| -> (f64, f64) {
            let k = (t / 1e-5).round() as usize;
            (fine[k].1, fine[k].2)
        };
        let final_error = |dt: f64| -> f64 {
            let path = be_scalar_trajectory(&params, &geom, 0.0, 5.0, dt, t_end).unwrap();
            let &(t, v, u) = path.last().unwrap();
            let (vr, ur) = reference_at(t);
            (v - vr).abs() + (u - ur).abs()
        };
        let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&dt| final_error(dt)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (1.7..=2.3).contains(&ratio),
                "halving ratio {ratio} outside first-order band, errors {errs:?}"
            );
        }
        let path = be_scalar_trajectory(&params, &geom, 0.0, 5.0, 1e-3, t_end).unwrap();
        for &(t, v, u) in &path {
            let (vr, ur) = reference_at(t);
            let denom = (vr.abs() + ur.abs()).max(1e-12);
            assert!(
                ((v - vr).abs() + (u - ur).abs()) / denom <= 1e-2,
                "trajectory off at t = {t}: ({v}, {u}) vs ({vr}, {ur})"
            );
        }
    }
}
