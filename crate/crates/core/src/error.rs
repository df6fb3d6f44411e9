use thiserror::Error;

/// Errors raised by the toolkit. Check *failures* (a decay condition that
/// does not hold, a commutator that is nonzero) are not errors; they are
/// recorded in the corresponding report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice point count overflows: {0}")]
    Overflow(String),

    #[error("point {0:?} is not a lattice site")]
    NotASite(Vec<f64>),

    #[error("site index {0} out of range")]
    SiteOutOfRange(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support {support:?} is not contained in volume {volume:?}")]
    SupportNotContained { support: Vec<usize>, volume: Vec<usize> },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("volume too small: {0}")]
    VolumeTooSmall(String),

    #[error("dense limit exceeded: dimension {dim} > {limit}")]
    DenseLimit { dim: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
