//! Built-in 3D propagation: track a 2D seed through neighbouring slices by
//! re-running region extraction inside the dilated footprint of the
//! previous slice and accepting the best-IoU candidate.

use mass_core::{Mask3D, MaskSource, Volume};
use ndarray::{Array2, Array3, Axis};

use crate::builtin::{dilate_2d, extract_regions, SeedProposal2D};
use crate::channels::ChannelView;
use crate::config::MaskGenConfig;
use crate::MaskGenError;

/// Stop tracking a direction once the best candidate falls below this IoU
/// against the previous slice.
pub const STOP_IOU: f64 = 0.5;
/// Footprint dilation radius (voxels) for the restricted re-extraction.
pub const DILATION_RADIUS: usize = 3;

fn best_candidate(
    lum: &Array2<f32>,
    footprint: &Array2<u8>,
    prev: &Array2<u8>,
    prev_mean: f64,
    cfg: &MaskGenConfig,
) -> Option<(Array2<u8>, f64, f64)> {
    // min_area 1: a shrinking structure should be tracked to its tip, the
    // IoU stop rule decides termination
    let regions = extract_regions(
        lum,
        Some(footprint),
        cfg.backend_params.intensity_levels,
        cfg.backend_params.merge_threshold,
        1,
    );
    let shape = lum.dim();
    let prev_count: usize = prev.iter().map(|&v| v as usize).sum();
    // Appearance gate: a candidate only counts as "the same object" if its
    // mean luminance stays within the merge threshold of the tracked
    // region's mean. Without this, the background chunk filling the
    // footprint can out-score everything once the structure ends.
    let gate = cfg.backend_params.merge_threshold as f64;
    // score candidates from their pixel lists; materialize only the winner
    let mut best: Option<(usize, f64)> = None;
    for (idx, r) in regions.iter().enumerate() {
        if (r.mean - prev_mean).abs() > gate {
            continue;
        }
        let inter = r
            .pixels
            .iter()
            .filter(|&&(i, j)| prev[(i as usize, j as usize)] != 0)
            .count();
        let union = prev_count + r.area - inter;
        let score = if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        };
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((idx, score));
        }
    }
    best.map(|(idx, score)| (regions[idx].to_mask(shape), score, regions[idx].mean))
}

/// Propagate one 2D seed proposal into a 3D mask: forward from the seed
/// slice to the volume end, then backward to the start. The seed-slice
/// content of the result equals the seed mask exactly; in the worst case
/// the result is that single slice.
pub fn propagate_3d(
    v: &Volume,
    view: &ChannelView,
    seed: &SeedProposal2D,
    cfg: &MaskGenConfig,
) -> Result<Mask3D, MaskGenError> {
    if seed.area == 0 {
        return Err(MaskGenError::InvalidConfig(
            "propagation requires a nonempty seed mask".into(),
        ));
    }
    let shape = v.shape();
    let axis = seed.axis;
    let extent = shape[axis];
    let mut out = Array3::<u8>::zeros((shape[0], shape[1], shape[2]));
    out.index_axis_mut(Axis(axis), seed.slice_index)
        .assign(&seed.mask2d);

    let seed_mean = {
        let lum = view.luminance(seed.slice_index);
        let mut sum = 0.0f64;
        for ((i, j), &m) in seed.mask2d.indexed_iter() {
            if m != 0 {
                sum += lum[(i, j)] as f64;
            }
        }
        sum / seed.area as f64
    };

    for dir in [1i64, -1i64] {
        let mut prev = seed.mask2d.clone();
        let mut prev_mean = seed_mean;
        let mut idx = seed.slice_index as i64 + dir;
        while idx >= 0 && idx < extent as i64 {
            let lum = view.luminance(idx as usize);
            let footprint = dilate_2d(&prev, DILATION_RADIUS);
            match best_candidate(&lum, &footprint, &prev, prev_mean, cfg) {
                Some((mask, score, mean)) if score >= STOP_IOU => {
                    out.index_axis_mut(Axis(axis), idx as usize).assign(&mask);
                    prev = mask;
                    prev_mean = mean;
                }
                _ => break,
            }
            idx += dir;
        }
    }

    Ok(Mask3D {
        voxels: out,
        seed_axis: axis,
        seed_slice: seed.slice_index,
        source: MaskSource::BUILTIN,
        volume_id: v.id.clone(),
    })
}
