//! End-to-end pipeline runs on synthetic phantoms: bank invariants,
//! determinism, and quality statistics against ground truth.

use mass_core::components::is_connected_3d;
use mass_core::metrics::iou_voxels;
use mass_maskgen::{generate_bank, mask_quality_stats, MaskGenConfig};
use mass_phantom::{generate_phantom, ModalityStyle, PhantomSpec};
use ndarray::Axis;

fn spec(seed: u64) -> PhantomSpec {
    PhantomSpec {
        seed,
        shape: [64, 64, 64],
        n_structures: 4,
        modality_style: ModalityStyle::CtLike,
        noise_std: 0.02,
    }
}

#[test]
fn bank_satisfies_invariants_and_is_deterministic() {
    let phantom = generate_phantom(&spec(0)).unwrap();
    let cfg = MaskGenConfig::default();
    let bank = generate_bank(&phantom.volume, &cfg, 0).unwrap();
    assert!(!bank.is_empty(), "pipeline produced no masks");

    for (mask, meta) in bank.masks.iter().zip(bank.manifest.masks.iter()) {
        // binary by construction of Mask3D; connected; above volume floor
        assert!(is_connected_3d(&mask.voxels), "mask {} disconnected", meta.index);
        assert!(mask.voxel_count() >= cfg.min_volume_voxels);
        // intersects its recorded seed slice
        let plane = mask.voxels.index_axis(Axis(mask.seed_axis), mask.seed_slice);
        assert!(plane.iter().any(|&v| v != 0), "mask {} misses its seed slice", meta.index);
        assert_eq!(meta.voxel_count, mask.voxel_count());
    }

    // exhaustive pairwise dedup bound
    for i in 0..bank.len() {
        for j in (i + 1)..bank.len() {
            let iou = iou_voxels(&bank.masks[i].voxels, &bank.masks[j].voxels).unwrap();
            assert!(iou <= cfg.dedup_iou, "pair ({i},{j}) iou {iou}");
        }
    }

    // byte-identical rerun
    let again = generate_bank(&phantom.volume, &cfg, 0).unwrap();
    assert_eq!(bank.len(), again.len());
    for (a, b) in bank.masks.iter().zip(again.masks.iter()) {
        assert_eq!(a.voxels, b.voxels);
    }
}

#[test]
fn quality_stats_cross_check_against_bruteforce() {
    let phantom = generate_phantom(&spec(0)).unwrap();
    let cfg = MaskGenConfig::default();
    let bank = generate_bank(&phantom.volume, &cfg, 0).unwrap();
    let gt = phantom.gt_masks();
    let stats = mask_quality_stats(&bank, &gt).unwrap();

    // independent re-computation over all (mask, gt) pairs
    for (g, row) in gt.iter().zip(stats.per_structure.iter()) {
        let mut best = 0.0f64;
        for m in &bank.masks {
            let inter: u64 = m
                .voxels
                .iter()
                .zip(g.voxels.iter())
                .map(|(&a, &b)| (a & b) as u64)
                .sum();
            let d = 2.0 * inter as f64 / (m.voxel_count() + g.voxel_count()) as f64;
            best = best.max(d);
        }
        assert!((row.best - best * 100.0).abs() < 1e-9);
    }
}
