use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation and mining pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in a structure or table file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The input data is well-formed but structurally unusable.
    #[error("structural error: {0}")]
    Structure(String),

    /// A parameter is outside its documented range or the combination is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad parameters rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Contract(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
