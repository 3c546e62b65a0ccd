use std::path::PathBuf;
use thiserror::Error;

/// Errors shared by all pipeline stages.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("volume '{id}': {reason}")]
    InvalidVolume { id: String, reason: String },

    #[error("mask is not binary: voxel value {value} at flat index {index}")]
    NonBinaryMask { value: u8, index: usize },

    #[error("resample target too coarse: output shape {shape:?} collapses along {axes} axes")]
    TooCoarse { shape: [usize; 3], axes: usize },

    #[error("checksum mismatch for mask {index}: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { index: u32, stored: u32, computed: u32 },

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CoreError::Json {
            path: path.into(),
            source,
        }
    }
}
