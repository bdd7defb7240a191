use thiserror::Error;

/// Errors raised by constructors and inverse builders.
///
/// "No inverse at this point" is never an error; those cases are returned as
/// values by the individual operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenInvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} exceeds the cap of {cap}")]
    CapExceeded { what: String, cap: u64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl GenInvError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GenInvError::InvalidInput(msg.into())
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        GenInvError::DimensionMismatch { expected, found }
    }
}

pub type Result<T> = std::result::Result<T, GenInvError>;
