//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QvdError {
    /// Malformed argument: bad axis, shape mismatch, invalid parameters.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A range collapsed to a single value (constant tensor or group).
    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    /// Input that makes the requested metric undefined, e.g. a zero-norm vector.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A calibration search had nothing to search over.
    #[error("search failed: {0}")]
    Search(String),

    /// Tensor file could not be decoded.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl QvdError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        QvdError::InvalidArgument(msg.into())
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        QvdError::Format {
            offset,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 usage/config, 3 numerical degeneracy, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            QvdError::InvalidArgument(_) | QvdError::Json(_) => 2,
            QvdError::DegenerateRange(_) | QvdError::DegenerateInput(_) | QvdError::Search(_) => 3,
            QvdError::Format { .. } | QvdError::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, QvdError>;
