//! Central numerical tolerances. Every threshold that a solver loop, an
//! invariant check, or the CLI relies on lives here so the values are not
//! scattered as anonymous literals.

/// Newton termination: scaled residual norm |R|_inf / max(1, |state|_inf).
pub const NEWTON_TOL: f64 = 1e-10;

/// Default Newton iteration budget per implicit step.
pub const NEWTON_MAX_ITER: usize = 25;

/// Maximum step halvings in the Newton line search.
pub const NEWTON_MAX_HALVINGS: usize = 8;

/// Linear solves must reach |J d - rhs|_inf <= LINSOLVE_REL * |rhs|_inf.
pub const LINSOLVE_REL: f64 = 1e-10;

/// Retry budget for time-step halving after a failed implicit step.
pub const STEP_RETRY_CAP: usize = 10;

/// Relative drift of the conserved quantity (mass for alpha = beta, weighted
/// mass otherwise) tolerated over a whole run.
pub const MASS_DRIFT_REL: f64 = 1e-8;

/// Per-step relative slack allowed on entropy monotonicity; the scheme is not
/// provably monotone in the discrete setting, so violations are flagged
/// rather than fatal.
pub const ENTROPY_SLACK_REL: f64 = 1e-12;

/// Entries below this are reported as nonnegativity violations. Small
/// negative values at roundoff scale are tolerated silently.
pub const NONNEG_FLOOR: f64 = -1e-10;

/// Steady-state solve: both defining relations must hold to this relative
/// residual.
pub const STEADY_RESIDUAL_REL: f64 = 1e-13;

/// Relative agreement required between the Beckner gap and alpha H / M0 on
/// mass-consistent states.
pub const GAP_IDENTITY_REL: f64 = 1e-10;

/// Relative agreement required between the analytic Jacobian and central
/// finite differences at smooth (strictly positive) states.
pub const JACOBIAN_FD_REL: f64 = 1e-6;

/// Entropy values below this are treated as exactly equilibrated when forming
/// dissipation-to-entropy ratios.
pub const ENTROPY_FLOOR: f64 = 1e-20;
