//! Multi-channel preprocessing: three complementary intensity mappings per
//! slice, in [0, 255]. CT uses fixed HU windows applied volume-wide; MR and
//! PET use quantile normalization computed per slice (each 2D slice is the
//! unit handed to a proposal backend).

use mass_core::{quantile_map, window_map, Modality, Volume};
use ndarray::{Array2, Array3, Axis};

use crate::{MaskGenError, MaskGenConfig};

/// Pre-channelized view of one volume, sliced along one axis.
pub struct ChannelView {
    /// `[3, d_axis, h, w]` stored as three volumes in slice-plane layout.
    channels: [Array3<f32>; 3],
    /// Per-voxel mean of the three channels (the builtin backend operates
    /// on luminance).
    luminance: Array3<f32>,
    pub axis: usize,
    pub plane_shape: (usize, usize),
    pub n_slices: usize,
}

fn slice_plane(vol: &Array3<f32>, axis: usize, idx: usize) -> Array2<f32> {
    vol.index_axis(Axis(axis), idx).to_owned()
}

impl ChannelView {
    /// Channelize `v` for slicing along `axis`.
    pub fn new(v: &Volume, cfg: &MaskGenConfig, axis: usize) -> Result<Self, MaskGenError> {
        let shape = v.shape();
        let n_slices = shape[axis];
        let plane_shape = match axis {
            0 => (shape[1], shape[2]),
            1 => (shape[0], shape[2]),
            2 => (shape[0], shape[1]),
            _ => return Err(MaskGenError::InvalidConfig(format!("axis {axis} out of range"))),
        };
        let full = (n_slices, plane_shape.0, plane_shape.1);
        let mut channels = [
            Array3::<f32>::zeros(full),
            Array3::<f32>::zeros(full),
            Array3::<f32>::zeros(full),
        ];
        match v.modality {
            Modality::CT => {
                for (c, &(center, width)) in cfg.ct_windows.iter().enumerate() {
                    let mapped = window_map(&v.voxels, center, width)?;
                    for idx in 0..n_slices {
                        channels[c]
                            .index_axis_mut(Axis(0), idx)
                            .assign(&slice_plane(&mapped, axis, idx));
                    }
                }
            }
            Modality::MR | Modality::PET => {
                for idx in 0..n_slices {
                    let plane = slice_plane(&v.voxels, axis, idx);
                    for (c, &(lo, hi)) in cfg.mr_quantiles.iter().enumerate() {
                        channels[c]
                            .index_axis_mut(Axis(0), idx)
                            .assign(&quantile_map(&plane, lo, hi)?);
                    }
                }
            }
            Modality::SYNTH => {
                return Err(MaskGenError::UnknownModality {
                    found: "SYNTH".into(),
                    supported: "CT, MR, PET",
                })
            }
        }
        let mut luminance = Array3::<f32>::zeros(full);
        for (i, l) in luminance.iter_mut().enumerate() {
            let flat0 = channels[0].as_slice().unwrap();
            let flat1 = channels[1].as_slice().unwrap();
            let flat2 = channels[2].as_slice().unwrap();
            *l = (flat0[i] + flat1[i] + flat2[i]) / 3.0;
        }
        Ok(ChannelView {
            channels,
            luminance,
            axis,
            plane_shape,
            n_slices,
        })
    }

    /// The 3-channel image of one slice, `[3, h, w]` in [0, 255].
    pub fn slice3(&self, idx: usize) -> Array3<f32> {
        let (h, w) = self.plane_shape;
        let mut out = Array3::<f32>::zeros((3, h, w));
        for c in 0..3 {
            out.index_axis_mut(Axis(0), c)
                .assign(&self.channels[c].index_axis(Axis(0), idx));
        }
        out
    }

    /// Mean-of-channels luminance of one slice.
    pub fn luminance(&self, idx: usize) -> Array2<f32> {
        self.luminance.index_axis(Axis(0), idx).to_owned()
    }
}

/// The per-slice 3-channel image for `(axis, idx)` of a volume; thin
/// wrapper over [`ChannelView`] for one-off use.
pub fn make_3channel(
    v: &Volume,
    cfg: &MaskGenConfig,
    axis: usize,
    idx: usize,
) -> Result<Array3<f32>, MaskGenError> {
    Ok(ChannelView::new(v, cfg, axis)?.slice3(idx))
}
