//! Error type shared across the crate.

/// Errors produced by constructors, engines, and the simulator.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A parameter is out of its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is incompatible with the caching policy, e.g. a
    /// deterministic placement of more users than contents.
    #[error("policy violation: {0}")]
    PolicyViolation(String),

    /// The exact enumeration engine would exceed its permutation budget.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn policy(msg: impl Into<String>) -> Self {
        Error::PolicyViolation(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::CapacityExceeded(msg.into())
    }
}
