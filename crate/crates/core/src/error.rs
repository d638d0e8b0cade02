use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed scenario document. The message names the key and, when
    /// known, the line.
    #[error("parse error: {0}")]
    Parse(String),

    /// A quantity was given in a unit that does not fit its kind.
    #[error("unit error at {key}: {message}")]
    Unit { key: String, message: String },

    /// A violated invariant, reported with the path of the offending field.
    #[error("invalid scenario at {path}: {message}")]
    Invalid { path: String, message: String },

    /// A function was evaluated outside of its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite derivative at z = {z} m (state index {index})")]
    NonFinite { z: f64, index: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
