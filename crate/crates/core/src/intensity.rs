//! Intensity mappings onto the 8-bit display range.

use crate::error::{CoreError, Result};
use ndarray::{Array, ArrayBase, Data, Dimension};

/// Clamp-and-rescale windowing: `out = 255 * clamp((x - (c - w/2)) / w, 0, 1)`.
///
/// Monotone non-decreasing in the input and bounded in [0, 255].
pub fn window_map<S, D>(x: &ArrayBase<S, D>, center: f32, width: f32) -> Result<Array<f32, D>>
where
    S: Data<Elem = f32>,
    D: Dimension,
{
    if !(width > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "window width must be positive, got {width}"
        )));
    }
    let lo = center - width / 2.0;
    Ok(x.mapv(|v| 255.0 * ((v - lo) / width).clamp(0.0, 1.0)))
}

/// Linear-interpolated quantile of an ascending-sorted slice, q in [0, 1].
pub fn sorted_quantile(sorted: &[f32], q: f64) -> f32 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = (pos - lo as f64) as f32;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Quantile normalization: values at/below the `lo_pct` quantile map to 0,
/// at/above the `hi_pct` quantile to 255, linear in between.
///
/// A degenerate input (lo quantile == hi quantile) returns all zeros and
/// logs a warning rather than failing.
pub fn quantile_map<S, D>(x: &ArrayBase<S, D>, lo_pct: f64, hi_pct: f64) -> Result<Array<f32, D>>
where
    S: Data<Elem = f32>,
    D: Dimension,
{
    if !(0.0..=100.0).contains(&lo_pct) || !(0.0..=100.0).contains(&hi_pct) || lo_pct >= hi_pct {
        return Err(CoreError::InvalidParameter(format!(
            "quantile range must satisfy 0 <= lo < hi <= 100, got ({lo_pct}, {hi_pct})"
        )));
    }
    let mut sorted: Vec<f32> = x.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q_lo = sorted_quantile(&sorted, lo_pct / 100.0);
    let q_hi = sorted_quantile(&sorted, hi_pct / 100.0);
    if q_lo >= q_hi {
        log::warn!(
            "quantile_map: degenerate input (q{lo_pct} == q{hi_pct} == {q_lo}); returning zeros"
        );
        return Ok(x.mapv(|_| 0.0));
    }
    let span = q_hi - q_lo;
    Ok(x.mapv(|v| 255.0 * ((v - q_lo) / span).clamp(0.0, 1.0)))
}
