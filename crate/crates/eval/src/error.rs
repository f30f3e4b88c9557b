use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Net(#[from] gestigo_net::NetError),
    #[error(transparent)]
    Image(#[from] gestigo_core::CondenseError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    /// A training run inside the search failed.
    #[error("training {vos} failed: {detail}")]
    Trainer { vos: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
