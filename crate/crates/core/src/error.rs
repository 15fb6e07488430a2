use thiserror::Error;

/// Errors raised by the dlab library.
#[derive(Debug, Error)]
pub enum DlabError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("desk-scale exceeded: {0}")]
    CapExceeded(String),

    #[error("net infeasible: {0}")]
    NetInfeasible(String),

    #[error("net is not certified")]
    Uncertified,

    #[error("theorem hypothesis violated: epsilon + sqrt(delta) = {0} >= 1")]
    HypothesisViolated(f64),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for DlabError {
    fn from(e: serde_json::Error) -> Self {
        DlabError::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DlabError>;
