//! Finite-volume discretization of the coupled system
//!
//!   field: dv/dt = d Lap v                 in Omega = (xMin, xMax) x (0, L)
//!   road:  du/dt = D u_xx + beta (nu0 (v|_{y=0})^alpha - mu0 u^beta)
//!
//! with the conjugate flux -d dv/dy|_{y=0} = alpha (mu0 u^beta - nu0 v^alpha)
//! through the bottom edge and zero Neumann elsewhere. Two-point fluxes on
//! the uniform mesh give transmissibilities hy/hx (x-faces), hx/hy (y-faces)
//! and 1/hx (road faces); the exchange term couples each bottom-row cell to
//! the road cell below it, with the bottom-row average standing in for the
//! trace v|_{y=0}.
//!
//! The residual is the backward Euler defect: a state `new` solves one step
//! from `old` exactly when residual(new, old, dt) = 0. Dividing the field
//! rows by alpha and the road rows by beta and summing telescopes the flux
//! terms, so every residual root conserves the weighted mass
//! (1/alpha) int v + (1/beta) int u to solver precision.

use crate::mesh::{Mesh, State};
use crate::model::Params;

/// The truncated power map s -> max(s, 0)^p used on every nonlinear term, so
/// that residual and Jacobian stay defined (and monotone) if an iterate dips
/// negative. For p = 1 it is the identity and the scheme is affine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMap {
    p: f64,
}

impl PowerMap {
    pub fn new(p: f64) -> Self {
        assert!(p >= 1.0, "power map exponent must be >= 1, got {p}");
        Self { p }
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn eval(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            s
        } else if s <= 0.0 {
            0.0
        } else {
            s.powf(self.p)
        }
    }

    /// One-sided derivative; continuous for p > 1, constant 1 for p = 1.
    pub fn deriv(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            1.0
        } else if s <= 0.0 {
            0.0
        } else {
            self.p * s.powf(self.p - 1.0)
        }
    }
}

/// Exchange terms for one road cell and the field cell above it, per unit
/// road length: the field gains alpha (mu0 u^beta - nu0 v^alpha), the road
/// gains beta (nu0 v^alpha - mu0 u^beta). Both are formed from one shared
/// difference so the conservation identity fieldGain/alpha + roadGain/beta
/// = 0 holds to rounding.
pub fn exchange_rates(params: &Params, v_bottom: f64, u: f64) -> (f64, f64) {
    let pa = PowerMap::new(params.alpha);
    let pb = PowerMap::new(params.beta);
    let diff = params.mu0 * pb.eval(u) - params.nu0 * pa.eval(v_bottom);
    (params.alpha * diff, -params.beta * diff)
}

/// Backward Euler residual over the flattened unknown vector (field cells
/// row-major, then road cells). Terms are accumulated in a fixed order per
/// cell: time derivative, west/east/south/north fluxes, exchange.
pub fn residual(new: &State, old: &State, dt: f64, mesh: &Mesh, params: &Params) -> Vec<f64> {
    mesh.check_state(new);
    mesh.check_state(old);
    assert!(dt > 0.0, "time step must be positive, got {dt}");
    let (nx, ny) = (mesh.nx, mesh.ny);
    let (hx, hy) = (mesh.hx, mesh.hy);
    let tx = params.d_field * hy / hx;
    let ty = params.d_field * hx / hy;
    let tr = params.d_road / hx;
    let vol = hx * hy;
    let mut r = vec![0.0; mesh.n_unknowns()];

    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let vc = new.v[c];
            let mut acc = vol * (vc - old.v[c]) / dt;
            if i > 0 {
                acc -= tx * (new.v[c - 1] - vc);
            }
            if i + 1 < nx {
                acc -= tx * (new.v[c + 1] - vc);
            }
            if j > 0 {
                acc -= ty * (new.v[c - nx] - vc);
            }
            if j + 1 < ny {
                acc -= ty * (new.v[c + nx] - vc);
            }
            if j == 0 {
                let (field_gain, _) = exchange_rates(params, vc, new.u[i]);
                acc -= hx * field_gain;
            }
            r[c] = acc;
        }
    }

    let base = nx * ny;
    for i in 0..nx {
        let ui = new.u[i];
        let mut acc = hx * (ui - old.u[i]) / dt;
        if i > 0 {
            acc -= tr * (new.u[i - 1] - ui);
        }
        if i + 1 < nx {
            acc -= tr * (new.u[i + 1] - ui);
        }
        let (_, road_gain) = exchange_rates(params, new.v[i], ui);
        acc -= hx * road_gain;
        r[base + i] = acc;
    }
    r
}

/// Sparse Jacobian of the backward Euler residual in compressed sparse row
/// form, rows and columns in the flattened unknown ordering. The pattern is
/// the five-point field stencil, the three-point road stencil, and one
/// coupling entry each way per road cell.
#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl JacobianMatrix {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
        y
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }
}

/// Assembles the Jacobian of `residual` with respect to the new state at the
/// given iterate. Column indices are emitted in ascending order within each
/// row.
pub fn jacobian(state: &State, dt: f64, mesh: &Mesh, params: &Params) -> JacobianMatrix {
    mesh.check_state(state);
    assert!(dt > 0.0, "time step must be positive, got {dt}");
    let (nx, ny) = (mesh.nx, mesh.ny);
    let (hx, hy) = (mesh.hx, mesh.hy);
    let tx = params.d_field * hy / hx;
    let ty = params.d_field * hx / hy;
    let tr = params.d_road / hx;
    let vol = hx * hy;
    let n = mesh.n_unknowns();
    let base = nx * ny;
    let pa = PowerMap::new(params.alpha);
    let pb = PowerMap::new(params.beta);

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * base + 4 * nx);
    let mut values = Vec::with_capacity(5 * base + 4 * nx);
    row_ptr.push(0);

    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let mut diag = vol / dt;
            if j > 0 {
                col_idx.push(c - nx);
                values.push(-ty);
                diag += ty;
            }
            if i > 0 {
                col_idx.push(c - 1);
                values.push(-tx);
                diag += tx;
            }
            let diag_slot = values.len();
            col_idx.push(c);
            values.push(0.0);
            if i + 1 < nx {
                col_idx.push(c + 1);
                values.push(-tx);
                diag += tx;
            }
            if j + 1 < ny {
                col_idx.push(c + nx);
                values.push(-ty);
                diag += ty;
            }
            if j == 0 {
                // d/dv of -hx alpha (mu0 u^beta - nu0 v^alpha)
                diag += hx * params.alpha * params.nu0 * pa.deriv(state.v[c]);
                col_idx.push(base + i);
                values.push(-hx * params.alpha * params.mu0 * pb.deriv(state.u[i]));
            }
            values[diag_slot] = diag;
            row_ptr.push(col_idx.len());
        }
    }

    for i in 0..nx {
        let mut diag = hx / dt;
        // d/dv of -hx beta (nu0 v^alpha - mu0 u^beta)
        col_idx.push(i);
        values.push(-hx * params.beta * params.nu0 * pa.deriv(state.v[i]));
        if i > 0 {
            col_idx.push(base + i - 1);
            values.push(-tr);
            diag += tr;
        }
        let diag_slot = values.len();
        col_idx.push(base + i);
        values.push(0.0);
        if i + 1 < nx {
            col_idx.push(base + i + 1);
            values.push(-tr);
            diag += tr;
        }
        diag += hx * params.beta * params.mu0 * pb.deriv(state.u[i]);
        values[diag_slot] = diag;
        row_ptr.push(col_idx.len());
    }

    JacobianMatrix { n, nx, ny, row_ptr, col_idx, values }
}
