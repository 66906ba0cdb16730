use std::path::{Path, PathBuf};

use crate::api::ApiError;

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("invalid operator setup: {0}")]
    Config(String),
    #[error("bad transcript: {0}")]
    Transcript(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl OperatorError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = OperatorError> = std::result::Result<T, E>;
