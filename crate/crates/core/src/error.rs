use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate normal at index {index}")]
    DegenerateNormal { index: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("image too small: {0}")]
    Size(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("score normalization failed: {0}")]
    Normalization(String),

    #[error("score set must contain both bona fide and attack samples")]
    SingleClass,

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("manifest invariant violated: {0}")]
    Manifest(String),

    #[error("insufficient subjects: need {needed}, have {available}")]
    InsufficientSubjects { needed: usize, available: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Compute,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Manifest(_)
            | Error::InsufficientSubjects { .. }
            | Error::Io { .. }
            | Error::SingleClass => ErrorClass::Data,
            _ => ErrorClass::Compute,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
