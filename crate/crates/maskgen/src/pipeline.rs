//! The per-volume pipeline driver and bank post-processing.

use mass_core::components::label_components_3d;
use mass_core::metrics::iou_voxels;
use mass_core::rng::{substream, substream_indexed};
use mass_core::{Mask3D, MaskBank, Volume};
use ndarray::{Array3, Axis};
use rand::Rng;

use crate::axis::{sample_seed_slices, select_axis};
use crate::builtin::propose_2d;
use crate::channels::ChannelView;
use crate::config::{BackendKind, MaskGenConfig};
use crate::external;
use crate::propagate::propagate_3d;
use crate::MaskGenError;

/// Run the full annotation-free pipeline on one volume: axis selection,
/// seed-slice sampling, 2D proposals, 3D propagation, post-processing.
/// Deterministic given `(volume, config, seed)`.
pub fn generate_bank(
    v: &Volume,
    cfg: &MaskGenConfig,
    seed: u64,
) -> Result<MaskBank, MaskGenError> {
    cfg.validate()?;
    let axes: Vec<usize> = if cfg.multi_axis {
        vec![0, 1, 2]
    } else {
        vec![select_axis(v.spacing)]
    };

    let mut raw: Vec<Mask3D> = Vec::new();
    for axis in axes {
        let view = ChannelView::new(v, cfg, axis)?;
        let slices = sample_seed_slices(v.shape()[axis], v.spacing[axis], cfg.d_mm);

        let proposals = match cfg.backend {
            BackendKind::BUILTIN => {
                let mut all = Vec::new();
                for &idx in &slices {
                    let mut rng = substream_indexed(
                        seed,
                        "maskgen/propose",
                        (axis * 1_000_000 + idx) as u64,
                    );
                    let img = view.slice3(idx);
                    all.extend(propose_2d(&img, cfg, axis, idx, &mut rng));
                }
                all
            }
            BackendKind::EXTERNAL => external::run_exchange(v, &view, &slices, cfg)?,
        };

        for p in &proposals {
            if p.area == 0 {
                continue;
            }
            raw.push(propagate_3d(v, &view, p, cfg)?);
        }
    }

    postprocess_bank(raw, cfg, seed, v)
}

/// Keep, per mask, the largest 26-connected component that still touches
/// the seed slice; drop masks below the volume floor; then break up
/// near-duplicate pairs (IoU above `dedup_iou`) by discarding one member
/// chosen by the seeded RNG until no such pair remains.
pub fn postprocess_bank(
    raw: Vec<Mask3D>,
    cfg: &MaskGenConfig,
    seed: u64,
    v: &Volume,
) -> Result<MaskBank, MaskGenError> {
    let mut kept: Vec<Mask3D> = Vec::new();
    for mask in raw {
        let cleaned = largest_seed_component(&mask);
        if cleaned.voxel_count() >= cfg.min_volume_voxels {
            kept.push(cleaned);
        }
    }

    // dedup. Pairwise IoU is unaffected by removals, so one deterministic
    // pass over the (prefiltered) pairs implements "discard until no pair
    // above the bound remains".
    let mut rng = substream(seed, "maskgen/dedup");
    let mut alive: Vec<bool> = vec![true; kept.len()];
    let counts: Vec<u64> = kept.iter().map(|m| m.voxel_count()).collect();
    for i in 0..kept.len() {
        for j in (i + 1)..kept.len() {
            if !alive[i] {
                break;
            }
            if !alive[j] {
                continue;
            }
            let (lo, hi) = (counts[i].min(counts[j]), counts[i].max(counts[j]));
            if (lo as f64) <= cfg.dedup_iou * hi as f64 {
                continue; // counts alone bound IoU at or below the threshold
            }
            let iou = iou_voxels(&kept[i].voxels, &kept[j].voxels)?;
            if iou > cfg.dedup_iou {
                let victim = if rng.gen_bool(0.5) { i } else { j };
                alive[victim] = false;
            }
        }
    }

    let mut bank = MaskBank::new(v.id.clone(), v.shape());
    for (i, mask) in kept.into_iter().enumerate() {
        if alive[i] {
            bank.push(mask, None)?;
        }
    }
    if bank.is_empty() {
        log::warn!(
            "mask bank for volume '{}' is empty after post-processing",
            v.id
        );
    }
    Ok(bank)
}

/// Largest 26-connected component of the mask that intersects its recorded
/// seed slice (every surviving bank mask keeps this invariant).
fn largest_seed_component(mask: &Mask3D) -> Mask3D {
    let (labels, n) = label_components_3d(&mask.voxels);
    if n <= 1 {
        return mask.clone();
    }
    let mut sizes = vec![0u64; n as usize + 1];
    for &l in labels.iter() {
        if l != 0 {
            sizes[l as usize] += 1;
        }
    }
    let seed_plane = labels.index_axis(Axis(mask.seed_axis), mask.seed_slice);
    let mut touching: Vec<bool> = vec![false; n as usize + 1];
    for &l in seed_plane.iter() {
        if l != 0 {
            touching[l as usize] = true;
        }
    }
    let pick = (1..=n as usize)
        .filter(|&l| touching[l])
        .max_by_key(|&l| (sizes[l], std::cmp::Reverse(l)))
        .unwrap_or_else(|| (1..=n as usize).max_by_key(|&l| sizes[l]).unwrap());
    let voxels = Array3::from_shape_fn(labels.dim(), |idx| (labels[idx] == pick as u32) as u8);
    Mask3D {
        voxels,
        seed_axis: mask.seed_axis,
        seed_slice: mask.seed_slice,
        source: mask.source,
        volume_id: mask.volume_id.clone(),
    }
}
