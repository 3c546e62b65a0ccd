//! Mask-generation configuration and backend parameters.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::MaskGenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    /// Classical intensity-quantization + hierarchical-merge proposals,
    /// runs fully offline.
    BUILTIN,
    /// File-exchange with an external promptable segmenter.
    EXTERNAL,
}

/// Knobs of the proposal backend. Builtin and external fields live side by
/// side so one config file round-trips for either backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendParams {
    /// BUILTIN: number of luminance quantization levels.
    pub intensity_levels: usize,
    /// BUILTIN: merge regions whose mean-luminance gap is below this
    /// (8-bit luminance units).
    pub merge_threshold: f32,
    /// Minimum 2D proposal area in pixels.
    pub min_area: usize,
    /// Prediction-quality floor handed to promptable backends.
    pub pred_iou: f32,
    /// Stability floor handed to promptable backends.
    pub stability: f32,
    /// EXTERNAL: exchange directory (slices out, proposals in).
    pub exchange_dir: Option<PathBuf>,
    /// EXTERNAL: seconds to wait for the `done` sentinel.
    pub timeout_s: u64,
    /// EXTERNAL: poll interval in milliseconds.
    pub poll_interval_ms: u64,
}

impl Default for BackendParams {
    fn default() -> Self {
        BackendParams {
            intensity_levels: 6,
            merge_threshold: 24.0,
            min_area: 16,
            pred_iou: 0.35,
            stability: 0.6,
            exchange_dir: None,
            timeout_s: 600,
            poll_interval_ms: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskGenConfig {
    /// Physical interval between seed slices, millimetres.
    pub d_mm: f64,
    /// CT channel windows as (center, width) pairs, HU.
    pub ct_windows: [(f32, f32); 3],
    /// MR/PET channel quantile ranges as (lo, hi) percent pairs.
    pub mr_quantiles: [(f64, f64); 3],
    pub max_masks_per_slice: usize,
    pub min_volume_voxels: u64,
    /// Pairs above this IoU are considered duplicates.
    pub dedup_iou: f64,
    pub backend: BackendKind,
    pub backend_params: BackendParams,
    /// Generate along all three axes and pool before post-processing.
    pub multi_axis: bool,
}

impl Default for MaskGenConfig {
    fn default() -> Self {
        MaskGenConfig {
            d_mm: 15.0,
            ct_windows: [(60.0, 350.0), (15.0, 250.0), (150.0, 1200.0)],
            mr_quantiles: [(5.0, 95.0), (15.0, 85.0), (1.0, 99.0)],
            max_masks_per_slice: 70,
            min_volume_voxels: 64,
            dedup_iou: 0.9,
            backend: BackendKind::BUILTIN,
            backend_params: BackendParams::default(),
            multi_axis: false,
        }
    }
}

impl MaskGenConfig {
    pub fn validate(&self) -> Result<(), MaskGenError> {
        if !(self.d_mm > 0.0) {
            return Err(MaskGenError::InvalidConfig(format!(
                "d_mm must be positive, got {}",
                self.d_mm
            )));
        }
        if !(self.dedup_iou > 0.0 && self.dedup_iou <= 1.0) {
            return Err(MaskGenError::InvalidConfig(format!(
                "dedup_iou must be in (0, 1], got {}",
                self.dedup_iou
            )));
        }
        if self.max_masks_per_slice < 1 {
            return Err(MaskGenError::InvalidConfig(
                "max_masks_per_slice must be >= 1".into(),
            ));
        }
        if self.backend_params.intensity_levels < 2 {
            return Err(MaskGenError::InvalidConfig(
                "intensity_levels must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_contract() {
        let c = MaskGenConfig::default();
        assert_eq!(c.d_mm, 15.0);
        assert_eq!(c.ct_windows[0], (60.0, 350.0));
        assert_eq!(c.ct_windows[2], (150.0, 1200.0));
        assert_eq!(c.mr_quantiles[0], (5.0, 95.0));
        assert_eq!(c.max_masks_per_slice, 70);
        assert_eq!(c.min_volume_voxels, 64);
        assert_eq!(c.dedup_iou, 0.9);
        assert_eq!(c.backend_params.intensity_levels, 6);
        assert!((c.backend_params.pred_iou - 0.35).abs() < 1e-6);
        assert!((c.backend_params.stability - 0.6).abs() < 1e-6);
        assert!(!c.multi_axis);
        c.validate().unwrap();
    }

    #[test]
    fn json_roundtrip_with_partial_override() {
        let json = r#"{ "d_mm": 10.0, "backend": "BUILTIN", "backend_params": { "intensity_levels": 8 } }"#;
        let c: MaskGenConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.d_mm, 10.0);
        assert_eq!(c.backend_params.intensity_levels, 8);
        // untouched fields keep defaults
        assert_eq!(c.max_masks_per_slice, 70);
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = MaskGenConfig::default();
        c.d_mm = 0.0;
        assert!(c.validate().is_err());
        let mut c = MaskGenConfig::default();
        c.dedup_iou = 0.0;
        assert!(c.validate().is_err());
        let mut c = MaskGenConfig::default();
        c.max_masks_per_slice = 0;
        assert!(c.validate().is_err());
    }
}
