use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested work or memory exceeds a configured limit.
    #[error("capacity exceeded: {what} needs {required}, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("symbol source exhausted after {consumed} symbols without a repeated window")]
    IncompleteTrajectory { consumed: u64 },

    #[error("unsupported arity k = {k}: {reason}")]
    UnsupportedArity { k: u32, reason: &'static str },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
