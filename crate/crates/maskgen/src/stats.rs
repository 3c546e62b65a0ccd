//! Mask-quality statistics of a bank against ground truth.

use mass_core::{dice_score, Mask3D, MaskBank};
use serde::{Deserialize, Serialize};

use crate::MaskGenError;

/// Per-structure quality numbers, all in percent.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StructureStats {
    /// Highest Dice between any bank mask and this structure.
    pub best: f64,
    /// Mean Dice over bank masks that overlap the structure at all.
    pub avg: f64,
    /// Share of overlapping masks with Dice above 40.
    pub pct_gt40: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskQualityStats {
    pub per_structure: Vec<StructureStats>,
    /// Unweighted mean of the per-structure rows.
    pub aggregate: StructureStats,
}

/// Compare every bank mask against every GT structure. An empty bank
/// yields all-zero statistics and a warning rather than an error.
pub fn mask_quality_stats(
    bank: &MaskBank,
    gt: &[Mask3D],
) -> Result<MaskQualityStats, MaskGenError> {
    let mut per_structure = Vec::with_capacity(gt.len());
    if bank.is_empty() {
        log::warn!("mask_quality_stats: empty bank, reporting zeros");
        per_structure.resize(gt.len(), StructureStats::default());
        return Ok(MaskQualityStats {
            per_structure,
            aggregate: StructureStats::default(),
        });
    }
    for structure in gt {
        let mut best = 0.0f64;
        let mut overlapping: Vec<f64> = Vec::new();
        for mask in &bank.masks {
            let d = dice_score(mask, structure)?;
            best = best.max(d);
            let intersects = mask
                .voxels
                .iter()
                .zip(structure.voxels.iter())
                .any(|(&a, &b)| a & b != 0);
            if intersects {
                overlapping.push(d);
            }
        }
        let avg = if overlapping.is_empty() {
            0.0
        } else {
            overlapping.iter().sum::<f64>() / overlapping.len() as f64
        };
        let pct_gt40 = if overlapping.is_empty() {
            0.0
        } else {
            overlapping.iter().filter(|&&d| d > 0.40).count() as f64
                / overlapping.len() as f64
        };
        per_structure.push(StructureStats {
            best: best * 100.0,
            avg: avg * 100.0,
            pct_gt40: pct_gt40 * 100.0,
        });
    }
    let n = per_structure.len().max(1) as f64;
    let aggregate = StructureStats {
        best: per_structure.iter().map(|s| s.best).sum::<f64>() / n,
        avg: per_structure.iter().map(|s| s.avg).sum::<f64>() / n,
        pct_gt40: per_structure.iter().map(|s| s.pct_gt40).sum::<f64>() / n,
    };
    Ok(MaskQualityStats {
        per_structure,
        aggregate,
    })
}
