//! Crate-wide error type. Variants are grouped by how the CLI reports them:
//! configuration problems exit with 1, solver failures with 2, and failed
//! invariant or consistency checks with 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration file, parameters, or initial data.
    #[error("config error: {0}")]
    Config(String),

    /// Input outside the domain of an operation (negative state passed to the
    /// entropy, evaluation point outside the rectangle, empty fit window).
    #[error("domain error: {0}")]
    Domain(String),

    /// Linear algebra failure: singular Jacobian or a solve that cannot reach
    /// the requested backward error.
    #[error("linear solver error: {0}")]
    Linear(String),

    /// Newton iteration did not converge within its budget.
    #[error("newton failure: {0}")]
    Newton(String),

    /// A quantitative check (gap identity, Jacobian consistency, order study)
    /// exceeded its tolerance.
    #[error("check failed: {0}")]
    Check(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
