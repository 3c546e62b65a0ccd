//! Overlap metrics on binary masks.

use crate::error::{CoreError, Result};
use crate::types::Mask3D;
use ndarray::Array3;

/// Dice coefficient on raw voxel arrays: `2|a∩b| / (|a|+|b|)`.
///
/// Both-empty is defined as 1.0 (the masks agree there is nothing), which
/// keeps per-structure averages NaN-free on phantoms lacking a structure.
pub fn dice_voxels(a: &Array3<u8>, b: &Array3<u8>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "dice requires equal shapes, got {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut inter = 0u64;
    let mut sa = 0u64;
    let mut sb = 0u64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        sa += x as u64;
        sb += y as u64;
        inter += (x & y) as u64;
    }
    if sa + sb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (sa + sb) as f64)
}

/// Dice coefficient between two masks (shape-checked).
pub fn dice_score(a: &Mask3D, b: &Mask3D) -> Result<f64> {
    dice_voxels(&a.voxels, &b.voxels)
}

/// Intersection-over-union on raw voxel arrays; both-empty is 1.0.
pub fn iou_voxels(a: &Array3<u8>, b: &Array3<u8>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "iou requires equal shapes, got {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        inter += (x & y) as u64;
        union += (x | y) as u64;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::MaskSource;
    use ndarray::{s, Array3};
    use proptest::prelude::*;

    fn mask(vox: Array3<u8>) -> Mask3D {
        Mask3D::new(vox, 0, 0, MaskSource::GT, "v").unwrap()
    }

    #[test]
    fn identity_is_one() {
        let mut v = Array3::<u8>::zeros((8, 8, 8));
        v.slice_mut(s![2..4, 2..4, 2..4]).fill(1);
        let a = mask(v);
        assert_eq!(dice_score(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        let mut va = Array3::<u8>::zeros((8, 8, 8));
        va[(0, 0, 0)] = 1;
        let mut vb = Array3::<u8>::zeros((8, 8, 8));
        vb[(7, 7, 7)] = 1;
        assert_eq!(dice_score(&mask(va), &mask(vb)).unwrap(), 0.0);
    }

    // Count oracle: 8-voxel cube vs the same cube shifted to overlap on 4.
    #[test]
    fn half_overlap_cube() {
        let mut va = Array3::<u8>::zeros((8, 8, 8));
        va.slice_mut(s![2..4, 2..4, 2..4]).fill(1);
        let mut vb = Array3::<u8>::zeros((8, 8, 8));
        vb.slice_mut(s![2..4, 2..4, 3..5]).fill(1);
        // direct count: intersection is 2x2x1 = 4 voxels, each cube has 8
        let inter: u64 = va
            .iter()
            .zip(vb.iter())
            .map(|(&x, &y)| (x & y) as u64)
            .sum();
        assert_eq!(inter, 4);
        assert_eq!(dice_score(&mask(va), &mask(vb)).unwrap(), 2.0 * 4.0 / 16.0);
    }

    #[test]
    fn both_empty_is_one() {
        let a = mask(Array3::<u8>::zeros((8, 8, 8)));
        let b = mask(Array3::<u8>::zeros((8, 8, 8)));
        assert_eq!(dice_score(&a, &b).unwrap(), 1.0);
        assert_eq!(iou_voxels(&a.voxels, &b.voxels).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = mask(Array3::<u8>::zeros((8, 8, 8)));
        let b = mask(Array3::<u8>::zeros((8, 8, 9)));
        assert!(dice_score(&a, &b).is_err());
    }

    proptest! {
        // Symmetric, in [0,1], and 1 iff identical (given one nonempty).
        #[test]
        fn dice_properties(seed in 0u64..10_000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let va = Array3::from_shape_fn((6, 6, 6), |_| rng.gen_bool(0.4) as u8);
            let vb = Array3::from_shape_fn((6, 6, 6), |_| rng.gen_bool(0.4) as u8);
            let d_ab = dice_voxels(&va, &vb).unwrap();
            let d_ba = dice_voxels(&vb, &va).unwrap();
            prop_assert_eq!(d_ab, d_ba);
            prop_assert!((0.0..=1.0).contains(&d_ab));
            let identical = va == vb;
            let nonempty = va.iter().any(|&v| v != 0) || vb.iter().any(|&v| v != 0);
            if nonempty {
                prop_assert_eq!(d_ab == 1.0, identical);
            }
        }
    }
}
