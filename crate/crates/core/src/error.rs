use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured work budget (bit size, enumeration volume, iterations) was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// A request needs more memory than the configured capacity allows.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A decision procedure ran out of budget before reaching a verdict.
    #[error("undecided: {0}")]
    Undecided(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn budget<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Budget(msg.into()))
}
