//! Error taxonomy shared by every pipeline stage.
//!
//! Variants are grouped so a front end can map them onto coarse exit
//! classes: malformed input data versus runtime failures.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A structured input file could not be parsed.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Input data violated a documented precondition or invariant.
    #[error("invalid data: {message}")]
    Validation { message: String },

    /// A matrix or vector had the wrong dimensions.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    /// NaN or infinity where finite values are required.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// A pluggable feature adapter failed or was not configured.
    #[error("adapter `{adapter}`: {message}")]
    Adapter { adapter: String, message: String },

    /// Training produced a non-finite loss and was aborted.
    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Divergence {
        epoch: usize,
        batch: usize,
        message: String,
    },

    /// Filesystem failure, annotated with the offending path.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A persisted artifact (cache file, checkpoint) is unreadable.
    #[error("corrupt artifact {path}: {message}")]
    CorruptArtifact { path: String, message: String },
}

impl Error {
    /// True when the failure stems from malformed caller-supplied data
    /// rather than a runtime fault. Front ends map this to the
    /// data-validation exit class.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Shape { .. }
                | Error::NonFinite { .. }
                | Error::Adapter { .. }
                | Error::CorruptArtifact { .. }
        )
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
