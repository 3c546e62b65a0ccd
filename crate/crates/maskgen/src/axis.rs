//! Slicing-axis selection and physical-interval slice sampling.

/// Pick the slicing axis: the one whose two in-plane spacings have the
/// smallest mean. Near-isotropic volumes (max/min spacing ratio <= 1.3)
/// default to axis 0.
pub fn select_axis(spacing: [f64; 3]) -> usize {
    let max = spacing.iter().cloned().fold(f64::MIN, f64::max);
    let min = spacing.iter().cloned().fold(f64::MAX, f64::min);
    if max / min <= 1.3 {
        return 0;
    }
    let mut best = 0usize;
    let mut best_mean = f64::INFINITY;
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (spacing[1], spacing[2]),
            1 => (spacing[0], spacing[2]),
            _ => (spacing[0], spacing[1]),
        };
        let mean = (a + b) / 2.0;
        if mean < best_mean {
            best_mean = mean;
            best = axis;
        }
    }
    best
}

/// Seed-slice indices along an axis: `{0, k, 2k, ...}` below `extent` with
/// `k = max(1, floor(d_mm / spacing_axis))`.
pub fn sample_seed_slices(extent: usize, spacing_axis: f64, d_mm: f64) -> Vec<usize> {
    let k = ((d_mm / spacing_axis).floor() as usize).max(1);
    (0..extent).step_by(k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anisotropic_picks_highest_in_plane_resolution() {
        // through-plane 5 mm, in-plane 0.7 mm: slice along axis 0
        assert_eq!(select_axis([5.0, 0.7, 0.7]), 0);
        assert_eq!(select_axis([0.7, 5.0, 0.7]), 1);
        assert_eq!(select_axis([0.7, 0.7, 5.0]), 2);
    }

    #[test]
    fn near_isotropic_defaults_to_axis_zero() {
        assert_eq!(select_axis([1.0, 1.0, 1.0]), 0);
        assert_eq!(select_axis([1.0, 1.2, 1.0]), 0); // ratio 1.2 <= 1.3
    }

    #[test]
    fn interval_formula_cases() {
        // spacing 5 mm, d 15 mm -> k = 3
        assert_eq!(sample_seed_slices(10, 5.0, 15.0), vec![0, 3, 6, 9]);
        // spacing 20 mm, d 15 mm -> floor(0.75) = 0 clamps to every slice
        assert_eq!(sample_seed_slices(4, 20.0, 15.0), vec![0, 1, 2, 3]);
    }

    // Enumeration oracle for the derived example: spacing 1.5, d 15,
    // extent 64 -> k = 10 -> seven indices {0, 10, ..., 60}.
    #[test]
    fn derived_enumeration_case() {
        let mut expect = Vec::new();
        let k = ((15.0f64 / 1.5).floor() as usize).max(1);
        let mut i = 0;
        while i < 64 {
            expect.push(i);
            i += k;
        }
        assert_eq!(expect.len(), 7);
        assert_eq!(expect, vec![0, 10, 20, 30, 40, 50, 60]);
        assert_eq!(sample_seed_slices(64, 1.5, 15.0), expect);
    }

    #[test]
    fn physical_gap_between_seeds_is_bounded() {
        // spacing between consecutive seeds (in mm) is <= d_mm + spacing
        for &(s, d, extent) in &[(0.7, 15.0, 200usize), (3.3, 15.0, 40), (17.0, 15.0, 9)] {
            let idx = sample_seed_slices(extent, s, d);
            assert_eq!(idx[0], 0);
            assert!(idx.iter().all(|&i| i < extent));
            for w in idx.windows(2) {
                let gap_mm = (w[1] - w[0]) as f64 * s;
                assert!(gap_mm <= d + s, "gap {gap_mm} for spacing {s}");
            }
        }
    }
}
