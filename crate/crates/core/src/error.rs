use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Bayes update left no posterior mass (all likelihoods underflowed).
    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    /// An estimator could not produce an estimate from the record.
    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    /// A precondition of the operation does not hold for this input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A strategy or plan specification is invalid.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
