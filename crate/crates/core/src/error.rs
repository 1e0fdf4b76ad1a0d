use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("record {id}: invalid {field}: {message}")]
    Invalid {
        id: String,
        field: &'static str,
        message: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("translation backend failed at input {index} ({text:?}): {message}")]
    Backend {
        index: usize,
        text: String,
        message: String,
    },

    #[error("vocabulary exceeds configured limit of {limit} types")]
    VocabularyOverflow { limit: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(id: impl Into<String>, field: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            id: id.into(),
            field,
            message: message.into(),
        }
    }

    pub fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    /// True for failures of the environment (files, external processes)
    /// rather than of the data or the arguments.
    pub fn is_environmental(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Backend { .. })
    }
}
