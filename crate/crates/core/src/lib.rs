//! Shared containers and primitives for mask-guided volumetric pretraining:
//! volumes with physical spacing, binary 3D masks, mask banks with an RLE
//! on-disk codec, intensity mappings, resampling, and the Dice metric.
//!
//! Everything in this crate is a pure function over immutable inputs and is
//! safe to call from any number of worker threads.

pub mod bank;
pub mod components;
pub mod error;
pub mod intensity;
pub mod io;
pub mod metrics;
pub mod resample;
pub mod rle;
pub mod rng;
pub mod types;

pub use bank::{BankManifest, MaskBank, MaskMeta, BANK_SCHEMA_VERSION};
pub use error::{CoreError, Result};
pub use intensity::{quantile_map, window_map};
pub use metrics::{dice_score, dice_voxels, iou_voxels};
pub use resample::{resample, resample_mask, Interpolation};
pub use types::{Mask3D, MaskSource, Modality, Volume};
