use std::path::PathBuf;

use thiserror::Error;

use crate::protocol::ErrorCode;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Net(#[from] gestigo_net::NetError),
    #[error(transparent)]
    Dataset(#[from] gestigo_core::DatasetError),
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    /// An error message sent by the server.
    #[error("server error {code:?}: {detail}")]
    Server { code: ErrorCode, detail: String },
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<tokio_tungstenite::tungstenite::Error> for ServiceError {
    fn from(e: tokio_tungstenite::tungstenite::Error) -> Self {
        ServiceError::Transport(e.to_string())
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
