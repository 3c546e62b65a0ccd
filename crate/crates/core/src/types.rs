//! Domain containers: [`Volume`] and [`Mask3D`].

use crate::error::{CoreError, Result};
use ndarray::Array3;
use serde::{Deserialize, Serialize};

/// Imaging modality of a volume. CT voxels are in Hounsfield Units; MR and
/// PET are in arbitrary units; SYNTH marks data of unknown provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    CT,
    MR,
    PET,
    SYNTH,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::CT => "CT",
            Modality::MR => "MR",
            Modality::PET => "PET",
            Modality::SYNTH => "SYNTH",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CT" => Ok(Modality::CT),
            "MR" | "MRI" => Ok(Modality::MR),
            "PET" => Ok(Modality::PET),
            "SYNTH" => Ok(Modality::SYNTH),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown modality '{other}' (supported: CT, MR, PET, SYNTH)"
            ))),
        }
    }
}

/// Where a mask came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskSource {
    /// Produced by the built-in classical proposal backend.
    BUILTIN,
    /// Produced by an external promptable segmenter via the file exchange.
    EXTERNAL,
    /// Expert / reference annotation.
    GT,
    /// Synthetic ground truth from the phantom generator.
    PHANTOM,
}

/// Minimum extent along every axis for a volume to be processable.
pub const MIN_VOLUME_EXTENT: usize = 8;

/// A 3D scalar field with per-axis physical spacing (mm per voxel).
///
/// Axis order is `(a0, a1, a2)` with `a2` fastest-varying in memory
/// (C order). `spacing[i]` is the physical step along axis `i`.
#[derive(Debug, Clone)]
pub struct Volume {
    pub voxels: Array3<f32>,
    pub spacing: [f64; 3],
    pub modality: Modality,
    pub id: String,
}

impl Volume {
    /// Build a volume, enforcing the container invariants: positive spacing,
    /// finite voxels, and extent >= 8 along every axis.
    pub fn new(
        voxels: Array3<f32>,
        spacing: [f64; 3],
        modality: Modality,
        id: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(CoreError::InvalidVolume {
                id,
                reason: format!("spacing must be positive and finite, got {spacing:?}"),
            });
        }
        let shape = voxels.dim();
        let shape = [shape.0, shape.1, shape.2];
        if shape.iter().any(|&d| d < MIN_VOLUME_EXTENT) {
            return Err(CoreError::InvalidVolume {
                id,
                reason: format!("shape {shape:?} below minimum extent {MIN_VOLUME_EXTENT}"),
            });
        }
        if let Some(bad) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidVolume {
                id,
                reason: format!("non-finite voxel at flat index {bad}"),
            });
        }
        Ok(Volume {
            voxels,
            spacing,
            modality,
            id,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        let d = self.voxels.dim();
        [d.0, d.1, d.2]
    }

    /// Intensity percentile over all voxels (p in [0, 100]).
    pub fn percentile(&self, p: f64) -> f32 {
        let mut v: Vec<f32> = self.voxels.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        crate::intensity::sorted_quantile(&v, p / 100.0)
    }
}

/// A binary 3D mask tied to a source volume, with seed-slice provenance.
#[derive(Debug, Clone)]
pub struct Mask3D {
    pub voxels: Array3<u8>,
    pub seed_axis: usize,
    pub seed_slice: usize,
    pub source: MaskSource,
    pub volume_id: String,
}

impl Mask3D {
    /// Build a mask, rejecting any voxel outside {0, 1}.
    pub fn new(
        voxels: Array3<u8>,
        seed_axis: usize,
        seed_slice: usize,
        source: MaskSource,
        volume_id: impl Into<String>,
    ) -> Result<Self> {
        if let Some((index, &value)) = voxels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(CoreError::NonBinaryMask { value, index });
        }
        Ok(Mask3D {
            voxels,
            seed_axis,
            seed_slice,
            source,
            volume_id: volume_id.into(),
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        let d = self.voxels.dim();
        [d.0, d.1, d.2]
    }

    /// Number of foreground voxels.
    pub fn voxel_count(&self) -> u64 {
        self.voxels.iter().map(|&v| v as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.iter().all(|&v| v == 0)
    }

    /// Tight foreground bounding box as `[lo0, hi0, lo1, hi1, lo2, hi2]`
    /// with inclusive bounds, or `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<[usize; 6]> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for ((i, j, k), &v) in self.voxels.indexed_iter() {
            if v != 0 {
                any = true;
                let idx = [i, j, k];
                for a in 0..3 {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a]);
                }
            }
        }
        any.then_some([lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn volume_rejects_bad_spacing() {
        let v = Array3::<f32>::zeros((8, 8, 8));
        assert!(Volume::new(v.clone(), [1.0, 0.0, 1.0], Modality::CT, "v").is_err());
        assert!(Volume::new(v, [1.0, -2.0, 1.0], Modality::CT, "v").is_err());
    }

    #[test]
    fn volume_rejects_nan_and_small_shape() {
        let mut v = Array3::<f32>::zeros((8, 8, 8));
        v[(1, 2, 3)] = f32::NAN;
        assert!(Volume::new(v, [1.0; 3], Modality::CT, "v").is_err());
        let small = Array3::<f32>::zeros((7, 8, 8));
        assert!(Volume::new(small, [1.0; 3], Modality::CT, "v").is_err());
    }

    #[test]
    fn mask_rejects_non_binary() {
        let mut m = Array3::<u8>::zeros((8, 8, 8));
        m[(0, 0, 0)] = 2;
        let err = Mask3D::new(m, 0, 0, MaskSource::GT, "v").unwrap_err();
        assert!(matches!(err, CoreError::NonBinaryMask { value: 2, .. }));
    }

    #[test]
    fn bounding_box_is_tight() {
        let mut m = Array3::<u8>::zeros((8, 8, 8));
        m[(2, 3, 4)] = 1;
        m[(5, 3, 6)] = 1;
        let mask = Mask3D::new(m, 0, 2, MaskSource::GT, "v").unwrap();
        assert_eq!(mask.bounding_box(), Some([2, 5, 3, 3, 4, 6]));
        assert_eq!(mask.voxel_count(), 2);
    }
}
