use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// The point is not in the span (SSC) or affine hull (ASSC) of the others.
    #[error("no representation: {0}")]
    NoRepresentation(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("generation failure: {0}")]
    GenerationFailure(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
