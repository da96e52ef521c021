use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// An invariant of the hand or object description does not hold.
    /// `field` is a dotted path into the input document.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{finger} {joint} angle {angle_deg:.4} deg outside [0, {limit_deg:.4}] deg")]
    JointRange {
        finger: String,
        joint: String,
        angle_deg: f64,
        limit_deg: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 bad input, 3 I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Io { .. } => 3,
            SimError::Numerical(_) => 4,
            _ => 2,
        }
    }
}
