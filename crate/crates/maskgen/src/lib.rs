//! Annotation-free 3D mask generation.
//!
//! The pipeline has five stages: multi-channel preprocessing, slice
//! sampling with automatic axis selection, 2D proposal generation, 3D
//! propagation, and post-processing into a deduplicated [`MaskBank`].
//! Proposals come either from the built-in classical backend (offline,
//! deterministic) or from an external promptable segmenter via a file
//! exchange.
//!
//! Per-volume runs are independent and stateless; a corpus driver may
//! process volumes in parallel.

use std::path::PathBuf;
use thiserror::Error;

pub mod axis;
pub mod builtin;
pub mod channels;
pub mod config;
pub mod external;
pub mod pipeline;
pub mod propagate;
pub mod stats;

pub use axis::{sample_seed_slices, select_axis};
pub use builtin::{propose_2d, SeedProposal2D};
pub use channels::{make_3channel, ChannelView};
pub use config::{BackendKind, BackendParams, MaskGenConfig};
pub use pipeline::{generate_bank, postprocess_bank};
pub use propagate::propagate_3d;
pub use stats::{mask_quality_stats, MaskQualityStats, StructureStats};

#[derive(Debug, Error)]
pub enum MaskGenError {
    #[error("invalid maskgen config: {0}")]
    InvalidConfig(String),

    #[error("unsupported modality {found} for mask generation (supported: {supported})")]
    UnknownModality {
        found: String,
        supported: &'static str,
    },

    #[error("external exchange failed at {path}: {detail}")]
    Exchange { path: PathBuf, detail: String },

    #[error("external exchange timed out after {timeout_s} s waiting on {path}")]
    ExchangeTimeout { path: PathBuf, timeout_s: u64 },

    #[error(transparent)]
    Core(#[from] mass_core::CoreError),
}
