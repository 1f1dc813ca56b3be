use thiserror::Error;

/// Errors raised anywhere in the lab. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration is inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),

    /// A requested allocation exceeds the configured memory cap.
    #[error("capacity error: {what} needs {requested} bytes but the cap is {cap} bytes")]
    Capacity {
        what: String,
        requested: u128,
        cap: u64,
    },

    /// Training produced a non-finite loss or parameter.
    #[error("training diverged at step {step}")]
    Divergence { step: u64 },

    /// A file could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit code for the CLI: 2 config, 3 capacity, 4 divergence, 5 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Divergence { .. } => 4,
            Error::Format(_) | Error::Io(_) => 5,
        }
    }
}

/// Rejects allocations of `bytes` above `cap`.
pub(crate) fn check_capacity(what: &str, bytes: u128, cap: u64) -> Result<()> {
    if bytes > cap as u128 {
        return Err(Error::Capacity {
            what: what.to_string(),
            requested: bytes,
            cap,
        });
    }
    Ok(())
}
