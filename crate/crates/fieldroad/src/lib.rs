//! Conservative finite-volume simulator for field-road diffusion systems: a
//! two-dimensional field exchanging mass through its boundary with a
//! one-dimensional road, with power-law exchange rates. Backward Euler in
//! time with damped Newton iterations, exact discrete conservation of the
//! weighted mass, and entropy-based diagnostics for the approach to the
//! constant steady state.

// Validation guards are written !(x > 0.0) on purpose: the negated form
// also rejects NaN, which x <= 0.0 would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod inequality;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod numerics;
pub mod output;
pub mod scheme;
pub mod solver;
pub mod tolerances;

pub use error::{Error, Result};
pub use mesh::{Face, Mesh, State};
pub use model::{Geometry, InitialData, Params};
