use thiserror::Error;

/// Errors raised by the codec, channel, receiver and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("rank {rank} out of range, must be below {bound}")]
    RankOutOfRange { rank: u128, bound: u128 },

    #[error("malformed support: {0}")]
    MalformedSupport(String),

    #[error("expected {expected} bits, got {actual}")]
    BitCount { expected: usize, actual: usize },

    #[error("codeword has {actual} nonzero entries, expected {expected}")]
    CodewordWeight { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown user id {0}")]
    UnknownUser(usize),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
