use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CntsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CntsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("numeric error: non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("degenerate selection: {0}")]
    DegenerateSelection(String),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<CntsError>,
    },
}

/// Coarse failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Io,
}

impl CntsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CntsError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        CntsError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            CntsError::Numeric(_) | CntsError::NonFiniteGradient { .. } => ErrorClass::Numeric,
            CntsError::Io { .. } => ErrorClass::Io,
            CntsError::Checkpoint(CheckpointError::Io(_)) => ErrorClass::Io,
            CntsError::Context { source, .. } => source.class(),
            _ => ErrorClass::Validation,
        }
    }

    /// Innermost error with context layers stripped.
    pub fn root(&self) -> &CntsError {
        match self {
            CntsError::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint: bad magic, not a checkpoint file")]
    BadMagic,

    #[error("checkpoint: unsupported format version {found:?}, expected {expected:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("checkpoint: expected a {expected} model, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("checkpoint: payload holds {found} bytes, expected {expected}")]
    PayloadLength { expected: usize, found: usize },

    #[error("checkpoint: malformed header: {0}")]
    Header(String),

    #[error("checkpoint: dims and activations disagree: {0}")]
    Layout(String),

    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}
