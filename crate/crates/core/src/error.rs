use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),
    /// A structural precondition (Hermiticity, mode, dimensions) does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Numerical breakdown: overflow, step underflow, non-convergence.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A shifted spectrum came too close to zero for a stable solve.
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    /// An analytic hypothesis of a bound is violated.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// A model parameter condition fails.
    #[error("model validation failed ({condition}): {detail}")]
    Validation { condition: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
