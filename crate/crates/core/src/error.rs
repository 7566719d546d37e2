use thiserror::Error;

/// Errors raised by instance construction, the interaction protocol and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or parameters in a configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A value failed a domain check (probability vector, case id, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// Out-of-range indices passed to the environment.
    #[error("usage error: {0}")]
    Usage(String),
    /// The interaction protocol was violated (e.g. pulling before a context arrived).
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A run hit its hard step cap or otherwise aborted.
    #[error("runtime abort: {0}")]
    Abort(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Abort(_) | Error::Protocol(_) => 3,
            _ => 2,
        }
    }
}
