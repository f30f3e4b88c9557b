use gestigo_core::{CondenseError, DatasetError};
use gestigo_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Condense(#[from] CondenseError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The request does not match how the model was built or trained.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl NetError {
    /// True for overflow/NaN failures inside the network.
    pub fn is_numeric(&self) -> bool {
        matches!(self, NetError::Nn(NnError::Numeric(_)))
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        NetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, NetError>;
