use thiserror::Error;

/// Crate-wide error type.
///
/// `exit_code` groups validation failures (exit 1) apart from runtime,
/// numeric and I/O failures (exit 2) for the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{key}: {message}")]
    Invalid { key: String, message: String },

    #[error("{path}: row {row}: {message}")]
    Malformed {
        path: String,
        row: usize,
        message: String,
    },

    #[error("non-finite state in {population} neuron {index} at t = {time} s")]
    NonFinite {
        population: &'static str,
        index: usize,
        time: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for validation errors, 2 for
    /// runtime and numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Invalid { .. } | Error::Malformed { .. } => 1,
            Error::NonFinite { .. } | Error::Contract(_) | Error::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
