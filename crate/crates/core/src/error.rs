use thiserror::Error;

use crate::conic::SolverStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("operator is not positive semi-definite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("trace {trace} differs from 1")]
    NotNormalized { trace: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("logarithm of an operator with a zero eigenvalue")]
    SingularLog,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("POVM is invalid: {0}")]
    InvalidPovm(String),

    #[error("solver finished with status {status:?}")]
    SolverFailure { status: SolverStatus },

    #[error("property violated: {0}")]
    ViolationDetected(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
