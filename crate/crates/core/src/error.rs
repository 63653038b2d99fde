use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-domain input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("chain is reducible: {0}")]
    Reducible(String),

    #[error("minorization condition fails: {0}")]
    MinorizationFails(String),

    /// The chain cannot produce levels for the split chain.
    #[error("splitting unavailable: {0}")]
    SplittingUnavailable(String),

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    /// `m` does not divide the horizon where the formula requires it.
    #[error("horizon {n} is not a multiple of the small-set order {m}")]
    NotMultipleOfOrder { n: u64, m: usize },

    /// Exhaustive enumeration would exceed the configured size limit.
    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("not enough samples: {0}")]
    TooFewSamples(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
