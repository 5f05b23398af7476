use thiserror::Error;

/// Errors raised by the library. Violations of colouring conditions are data
/// (see `structures::Violation`), not errors.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("point {point} is outside the universe of size {universe}")]
    PointOutOfRange { point: u32, universe: u32 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceCap { what: String, needed: u128, cap: u128 },

    #[error("evaluation budget exceeded after {assignments} assignments")]
    BudgetExceeded { assignments: u64 },

    #[error("parse error at offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn cap(what: impl Into<String>, needed: u128, cap: u128) -> Self {
        Error::ResourceCap { what: what.into(), needed, cap }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
