//! Crate-wide error type.
//!
//! Variants are grouped by the exit-code classes the CLI reports: parse,
//! validation, non-convergence, unachievable target, and everything else.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: u64, message: String },

    #[error("{file}:{line}: {message}")]
    Validation { file: String, line: u64, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix has no positive entries; no dominant eigenpair")]
    ZeroMatrix,

    #[error("target {target} unachievable: at gamma = {gamma:.6} the structure still yields lambda = {lambda:.6}")]
    UnachievableTarget { target: String, gamma: f64, lambda: f64 },

    #[error("lambda(gamma) is not monotone over the scan: {detail}")]
    NonMonotoneGamma { detail: String },

    #[error("deduction exceeds compensation headroom for: {0}")]
    NonPositiveColumnFactor(String),

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    /// CLI exit code class for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::Validation { .. } | Error::InvalidInput(_) | Error::InfeasibleConfig(_) => 3,
            Error::NonConvergence { .. } | Error::ZeroMatrix => 4,
            Error::UnachievableTarget { .. } | Error::NonMonotoneGamma { .. } => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
