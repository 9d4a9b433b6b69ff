//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("primitive does not fit inside the domain after {attempts} placement attempts")]
    PrimitiveDoesNotFit { attempts: u32 },

    #[error("no background reference: the mask has no background voxel to measure distance to")]
    NoBackgroundReference,

    #[error(
        "gap width {tau_gap} violates the stencil-clearance rule: \
         tau_gap >= kernel_size - 1 = {required} for {kernel_size}x{kernel_size}x{kernel_size} kernels"
    )]
    UnsafeGapWidth {
        tau_gap: u32,
        kernel_size: u32,
        required: u32,
    },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: [usize; 3],
        got: [usize; 3],
    },

    #[error("domain too small: every dimension must be >= {min} (got {got:?})")]
    DomainTooSmall { min: usize, got: [usize; 3] },

    #[error("config parse error at {path}:{line}: {message}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("checksum mismatch for {path}: meta records {expected}, payload hashes to {got}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        got: String,
    },

    #[error("volume {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn at_index(self, index: u64) -> Self {
        Error::Sample {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
