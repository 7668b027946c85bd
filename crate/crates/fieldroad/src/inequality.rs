//! Discrete functional-inequality laboratory.
//!
//! The long-time analysis rests on comparing three quantities under the
//! normalized equilibrium measure rho (field density vInf, road density
//! uInf, total mass one): for f built from the state as (v / vInf)^alpha on
//! the field and (u / uInf)^alpha on the road,
//!
//! * a Poincare-Wirtinger quotient: variance of f against the Dirichlet and
//!   exchange energy of the state,
//! * a Beckner-type gap: int f^{(alpha+1)/alpha} drho minus
//!   (int f^{1/alpha} drho)^{alpha+1}, nonnegative by Jensen and equal to
//!   alpha H / M0 whenever the state carries the equilibrium mass,
//! * the entropy-dissipation quotient D / H along a trajectory.
//!
//! The gap is a difference of terms that agree to ten digits late in a run,
//! so both sides are assembled from expm1/log1p building blocks around the
//! equilibrium value; mass drift then enters the identity only at second
//! order.

use crate::diagnostics::{Equilibrium, Record};
use crate::error::{Error, Result};
use crate::mesh::{Face, Mesh, State};
use crate::model::Params;
use crate::numerics::{pow1pm1, powm1, CompensatedSum};
use crate::scheme::PowerMap;
use crate::tolerances;

/// Per-cell weights of the normalized equilibrium measure. The reference
/// mass is accumulated from the same per-cell products as the weights, so
/// the weights sum to one up to rounding.
#[derive(Debug, Clone, Copy)]
pub struct RhoWeights {
    /// Weight of each field cell.
    pub field: f64,
    /// Weight of each road cell.
    pub road: f64,
    /// Unnormalized reference mass vInf |field| + uInf |road|.
    pub m0_ref: f64,
}

impl RhoWeights {
    pub fn build(eq: &Equilibrium, mesh: &Mesh) -> Self {
        let field_raw = eq.v_inf * mesh.cell_volume();
        let road_raw = eq.u_inf * mesh.hx;
        let m0_ref = field_raw * (mesh.n_field() as f64) + road_raw * (mesh.nx as f64);
        Self { field: field_raw / m0_ref, road: road_raw / m0_ref, m0_ref }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoincareReport {
    /// Variance of f under rho.
    pub lhs: f64,
    /// Dirichlet energy of v^alpha and u^alpha plus squared exchange
    /// mismatch, with geometric transmissibilities.
    pub rhs: f64,
    /// lhs / rhs, or None when the energy vanishes (flat balanced states).
    pub ratio: Option<f64>,
}

/// The Poincare-Wirtinger quotient of a state. Built with exponent alpha on
/// both components throughout; the construction targets matching exponents
/// and is evaluated as written otherwise.
pub fn pw_ratio(state: &State, eq: &Equilibrium, mesh: &Mesh, params: &Params) -> PoincareReport {
    mesh.check_state(state);
    let rho = RhoWeights::build(eq, mesh);
    let pa = PowerMap::new(params.alpha);
    let f_field: Vec<f64> = state
        .v
        .iter()
        .map(|&v| pa.eval(v.max(0.0) / eq.v_inf))
        .collect();
    let f_road: Vec<f64> = state
        .u
        .iter()
        .map(|&u| pa.eval(u.max(0.0) / eq.u_inf))
        .collect();

    let mut mean = CompensatedSum::new();
    for &f in &f_field {
        mean.add(rho.field * f);
    }
    for &f in &f_road {
        mean.add(rho.road * f);
    }
    let mean = mean.value();
    let mut var = CompensatedSum::new();
    for &f in &f_field {
        var.add(rho.field * (f - mean) * (f - mean));
    }
    for &f in &f_road {
        var.add(rho.road * (f - mean) * (f - mean));
    }

    let gv: Vec<f64> = state.v.iter().map(|&v| pa.eval(v.max(0.0))).collect();
    let gu: Vec<f64> = state.u.iter().map(|&u| pa.eval(u.max(0.0))).collect();
    let mut energy = CompensatedSum::new();
    for face in mesh.faces() {
        let t = mesh.transmissibility(face).expect("interior face");
        let diff = match face {
            Face::FieldX { i, j } => gv[mesh.field_index(i + 1, j)] - gv[mesh.field_index(i, j)],
            Face::FieldY { i, j } => gv[mesh.field_index(i, j + 1)] - gv[mesh.field_index(i, j)],
            Face::Road { i } => gu[i + 1] - gu[i],
        };
        energy.add(t * diff * diff);
    }
    for i in 0..mesh.nx {
        let mismatch = params.alpha * (params.nu0 * gv[i] - params.mu0 * gu[i]);
        energy.add(mesh.hx * mismatch * mismatch);
    }

    let lhs = var.value();
    let rhs = energy.value();
    let ratio = (rhs > 0.0).then(|| lhs / rhs);
    PoincareReport { lhs, rhs, ratio }
}

/// The Beckner-type gap int f^{(alpha+1)/alpha} drho -
/// (int f^{1/alpha} drho)^{alpha+1}, assembled from deviations s - 1 so the
/// two nearly equal sides cancel analytically rather than numerically.
pub fn beckner_gap(state: &State, eq: &Equilibrium, mesh: &Mesh, params: &Params) -> f64 {
    mesh.check_state(state);
    let rho = RhoWeights::build(eq, mesh);
    let p1 = params.alpha + 1.0;
    // a = int (f^{(alpha+1)/alpha} - 1) drho, b = int (f^{1/alpha} - 1) drho.
    let mut a = CompensatedSum::new();
    let mut b = CompensatedSum::new();
    for &v in &state.v {
        let s = v.max(0.0) / eq.v_inf;
        a.add(rho.field * powm1(s, p1));
        b.add(rho.field * (s - 1.0));
    }
    for &u in &state.u {
        let s = u.max(0.0) / eq.u_inf;
        a.add(rho.road * powm1(s, p1));
        b.add(rho.road * (s - 1.0));
    }
    // b is a mass defect and sits far below eps near equilibrium, so the
    // (1 + b)^{alpha+1} term must be expanded from b directly; adding the 1
    // first would round it away along with the leading (alpha+1) b.
    a.value() - pow1pm1(b.value(), p1)
}

#[derive(Debug, Clone, Copy)]
pub struct JensenReport {
    /// int f^{1/alpha} drho.
    pub lhs: f64,
    /// (int f^{(alpha+1)/alpha} drho)^{1/(alpha+1)}.
    pub rhs: f64,
}

impl JensenReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-14)
    }
}

/// Jensen comparison of the two moments entering the gap.
pub fn jensen(state: &State, eq: &Equilibrium, mesh: &Mesh, params: &Params) -> JensenReport {
    mesh.check_state(state);
    let rho = RhoWeights::build(eq, mesh);
    let p1 = params.alpha + 1.0;
    let mut low = CompensatedSum::new();
    let mut high = CompensatedSum::new();
    for &v in &state.v {
        let s = v.max(0.0) / eq.v_inf;
        low.add(rho.field * s);
        high.add(rho.field * s.powf(p1));
    }
    for &u in &state.u {
        let s = u.max(0.0) / eq.u_inf;
        low.add(rho.road * s);
        high.add(rho.road * s.powf(p1));
    }
    JensenReport { lhs: low.value(), rhs: high.value().powf(1.0 / p1) }
}

/// Smallest dissipation-to-entropy quotient over the records whose entropy
/// exceeds the floor; a lower bound on the exponential decay rate actually
/// realized by the trajectory.
pub fn entropy_dissipation_ratio(records: &[Record]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for r in records {
        if r.h > tolerances::ENTROPY_FLOOR {
            let q = r.diss / r.h;
            best = Some(best.map_or(q, |b: f64| b.min(q)));
        }
    }
    best.ok_or_else(|| {
        Error::Domain("no records with entropy above the floor to form D / H".into())
    })
}
