use std::path::PathBuf;

use crate::engine::Directive;
use crate::geo::OutOfField;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown agent {0}")]
    UnknownAgent(u32),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("{source}")]
    OutOfField {
        source: OutOfField,
        /// The agent's last valid directive.
        directive: Option<Box<Directive>>,
    },
    #[error("session is complete")]
    Closed,
    #[error("token {0} was already used by another agent")]
    TokenConflict(String),
    #[error(transparent)]
    Core(#[from] sbs_core::Error),
    #[error("corrupt event log: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = FieldError> = std::result::Result<T, E>;
