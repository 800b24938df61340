use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("point is infeasible for the regularizer")]
    Infeasible,

    #[error("optimum is unavailable for this problem")]
    OptimumUnavailable,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("line search exceeded {0} increases of the Lipschitz estimate")]
    LineSearchCap(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
