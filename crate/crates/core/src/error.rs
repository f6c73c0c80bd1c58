use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Duplicate, missing or overlapping subsystem labels.
    #[error("labeling error: {0}")]
    Label(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A matrix failed the density-matrix invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A Kraus set or ensemble failed its completeness checks.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown state family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
