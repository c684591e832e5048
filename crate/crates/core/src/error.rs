use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("invalid Pauli label `{0}`")]
    InvalidPauli(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("control system has no relaxation model")]
    MissingRelaxation,

    #[error("Lie closure exceeded the maximum dimension {0}")]
    MaxDimensionExceeded(usize),

    #[error("subspace is not invariant (leakage {0:e})")]
    NotInvariant(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
