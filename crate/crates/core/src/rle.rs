//! Run-length codec for binary 3D masks.
//!
//! Record layout (all integers little-endian u32, runs over the flattened
//! C-order voxel sequence):
//!
//! ```text
//! mask_index  run_count  (start, length) * run_count
//! ```
//!
//! An empty mask is a header-only record (`run_count == 0`); a full mask is
//! a single run covering the whole flat range.

use crate::error::{CoreError, Result};
use ndarray::Array3;

/// One decoded record: the mask index and its foreground runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleRecord {
    pub index: u32,
    pub runs: Vec<(u32, u32)>,
}

/// Extract foreground runs from a flat binary sequence.
pub fn runs_from_flat<'a>(flat: impl Iterator<Item = &'a u8>) -> Vec<(u32, u32)> {
    let mut runs = Vec::new();
    let mut start = 0u32;
    let mut len = 0u32;
    for (pos, &v) in flat.enumerate() {
        if v != 0 {
            if len == 0 {
                start = pos as u32;
            }
            len += 1;
        } else if len > 0 {
            runs.push((start, len));
            len = 0;
        }
    }
    if len > 0 {
        runs.push((start, len));
    }
    runs
}

/// Encode a binary voxel array as one RLE record.
pub fn encode_record(voxels: &Array3<u8>, index: u32) -> Vec<u8> {
    let flat = voxels.as_standard_layout();
    encode_flat(flat.as_slice().unwrap(), index)
}

/// Encoded size in bytes for a run count.
pub fn encoded_len(run_count: usize) -> usize {
    8 + 8 * run_count
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
}

/// Decode the record starting at `*offset`, advancing the offset.
pub fn decode_record(bytes: &[u8], offset: &mut usize) -> Result<RleRecord> {
    let malformed = |detail: String| CoreError::Malformed {
        what: "rle record",
        detail,
    };
    let index = read_u32(bytes, *offset)
        .ok_or_else(|| malformed(format!("truncated header at byte {offset}")))?;
    let count = read_u32(bytes, *offset + 4)
        .ok_or_else(|| malformed(format!("truncated run count at byte {}", *offset + 4)))?;
    let mut runs = Vec::with_capacity(count as usize);
    let mut at = *offset + 8;
    for r in 0..count {
        let start = read_u32(bytes, at)
            .ok_or_else(|| malformed(format!("mask {index}: truncated run {r}")))?;
        let len = read_u32(bytes, at + 4)
            .ok_or_else(|| malformed(format!("mask {index}: truncated run {r}")))?;
        runs.push((start, len));
        at += 8;
    }
    *offset = at;
    Ok(RleRecord { index, runs })
}

/// Materialize a record into a flat binary sequence of length `n`.
pub fn record_to_flat(rec: &RleRecord, n: usize) -> Result<Vec<u8>> {
    let mut flat = vec![0u8; n];
    for &(start, len) in &rec.runs {
        let (s, e) = (start as usize, start as usize + len as usize);
        if e > n {
            return Err(CoreError::Malformed {
                what: "rle record",
                detail: format!(
                    "mask {}: run [{s}, {e}) exceeds voxel count {n}",
                    rec.index
                ),
            });
        }
        flat[s..e].fill(1);
    }
    Ok(flat)
}

/// Encode a flat binary sequence as one record.
pub fn encode_flat(flat: &[u8], index: u32) -> Vec<u8> {
    let runs = runs_from_flat(flat.iter());
    let mut out = Vec::with_capacity(8 + 8 * runs.len());
    out.extend_from_slice(&index.to_le_bytes());
    out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
    for (start, len) in runs {
        out.extend_from_slice(&start.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
    }
    out
}

/// Materialize a record into a voxel array of the given shape.
pub fn record_to_voxels(rec: &RleRecord, shape: [usize; 3]) -> Result<Array3<u8>> {
    let flat = record_to_flat(rec, shape[0] * shape[1] * shape[2])?;
    Array3::from_shape_vec((shape[0], shape[1], shape[2]), flat).map_err(|e| {
        CoreError::Malformed {
            what: "rle record",
            detail: e.to_string(),
        }
    })
}
