use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `line` is 1-based and counts the header row.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("NAICS code {0} has no description")]
    MissingNaics(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("unknown commodity class {0}")]
    UnknownClass(String),

    #[error("commodity class {0} has no emission factor")]
    MissingFactor(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// Zero vectors and other undefined numeric cases.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("embedding provider failed on {id}: {message}")]
    Provider { id: String, message: String },

    #[error("cannot resolve encoder {0:?}")]
    UnresolvedEncoder(String),

    #[error("resource exhausted ({message}); config: {config}")]
    Resource { message: String, config: String },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.to_string(),
        }
    }

    /// True for errors caused by the caller's inputs rather than a defect.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_user_error(),
            Error::Resource { .. } | Error::Serde(_) => false,
            _ => true,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
