use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading datasets or validating skeleton sequences.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("not found: {0}")]
    NotFound(String),

    #[error("read error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid sequence {source_path}: {msg}")]
    Sequence { source_path: String, msg: String },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures in the condensation pipeline.
#[derive(Debug, Error)]
pub enum CondenseError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
