//! File-exchange backend: the pipeline writes preprocessed slices and a
//! request, an external promptable segmenter writes RLE proposal files and
//! a `done` sentinel.
//!
//! Contract per volume/axis:
//!   - pipeline writes `slice_<axis>_<idx>.png` (8-bit, 3-channel) for each
//!     sampled slice plus `request.json`
//!   - the external process writes `proposals_<idx>.rle` per slice (core
//!     RLE records over the row-major flattened slice) and finally `done`
//!   - the pipeline polls until `done` appears or the timeout elapses
//!
//! A record with zero runs means "no proposal"; a missing proposals file
//! after `done` is a protocol violation and is reported with its path.

use mass_core::rle;
use mass_core::Volume;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::builtin::SeedProposal2D;
use crate::channels::ChannelView;
use crate::config::MaskGenConfig;
use crate::MaskGenError;

pub const REQUEST_FILE: &str = "request.json";
pub const DONE_FILE: &str = "done";
pub const EXCHANGE_FORMAT_VERSION: u32 = 1;

/// `request.json` payload describing what the external segmenter should do.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExchangeRequest {
    pub format_version: u32,
    pub volume_id: String,
    pub axis: usize,
    /// Slice plane shape `[h, w]`; proposals are RLE over `h * w` pixels.
    pub plane_shape: [usize; 2],
    pub slice_indices: Vec<usize>,
    pub min_area: usize,
    pub max_masks_per_slice: usize,
    pub pred_iou: f32,
    pub stability: f32,
}

pub fn slice_file_name(axis: usize, idx: usize) -> String {
    format!("slice_{axis}_{idx}.png")
}

pub fn proposals_file_name(idx: usize) -> String {
    format!("proposals_{idx}.rle")
}

fn write_slice_png(
    dir: &Path,
    axis: usize,
    idx: usize,
    view: &ChannelView,
) -> Result<(), MaskGenError> {
    let img = view.slice3(idx);
    let (_, h, w) = img.dim();
    let mut buf = image::RgbImage::new(w as u32, h as u32);
    for i in 0..h {
        for j in 0..w {
            let px = [
                img[(0, i, j)].round().clamp(0.0, 255.0) as u8,
                img[(1, i, j)].round().clamp(0.0, 255.0) as u8,
                img[(2, i, j)].round().clamp(0.0, 255.0) as u8,
            ];
            buf.put_pixel(j as u32, i as u32, image::Rgb(px));
        }
    }
    let path = dir.join(slice_file_name(axis, idx));
    buf.save(&path)
        .map_err(|e| MaskGenError::Exchange {
            path: path.clone(),
            detail: e.to_string(),
        })
}

/// Run one exchange round for the sampled slices of one axis.
pub fn run_exchange(
    v: &Volume,
    view: &ChannelView,
    slice_indices: &[usize],
    cfg: &MaskGenConfig,
) -> Result<Vec<SeedProposal2D>, MaskGenError> {
    let p = &cfg.backend_params;
    let dir = p
        .exchange_dir
        .as_ref()
        .ok_or_else(|| MaskGenError::InvalidConfig(
            "EXTERNAL backend requires backend_params.exchange_dir".into(),
        ))?
        .clone();
    std::fs::create_dir_all(&dir).map_err(|e| MaskGenError::Exchange {
        path: dir.clone(),
        detail: e.to_string(),
    })?;

    let (h, w) = view.plane_shape;
    for &idx in slice_indices {
        write_slice_png(&dir, view.axis, idx, view)?;
    }
    let request = ExchangeRequest {
        format_version: EXCHANGE_FORMAT_VERSION,
        volume_id: v.id.clone(),
        axis: view.axis,
        plane_shape: [h, w],
        slice_indices: slice_indices.to_vec(),
        min_area: p.min_area,
        max_masks_per_slice: cfg.max_masks_per_slice,
        pred_iou: p.pred_iou,
        stability: p.stability,
    };
    let req_path = dir.join(REQUEST_FILE);
    std::fs::write(
        &req_path,
        serde_json::to_string_pretty(&request).expect("request serializes"),
    )
    .map_err(|e| MaskGenError::Exchange {
        path: req_path,
        detail: e.to_string(),
    })?;

    // poll for the sentinel
    let deadline = Instant::now() + Duration::from_secs(p.timeout_s);
    let done = dir.join(DONE_FILE);
    while !done.exists() {
        if Instant::now() >= deadline {
            return Err(MaskGenError::ExchangeTimeout {
                path: dir.clone(),
                timeout_s: p.timeout_s,
            });
        }
        std::thread::sleep(Duration::from_millis(p.poll_interval_ms));
    }

    let mut proposals = Vec::new();
    for &idx in slice_indices {
        let path = dir.join(proposals_file_name(idx));
        let bytes = std::fs::read(&path).map_err(|e| MaskGenError::Exchange {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        let mut offset = 0usize;
        let mut per_slice = 0usize;
        while offset < bytes.len() && per_slice < cfg.max_masks_per_slice {
            let rec = rle::decode_record(&bytes, &mut offset).map_err(|e| {
                MaskGenError::Exchange {
                    path: path.clone(),
                    detail: e.to_string(),
                }
            })?;
            let flat = rle::record_to_flat(&rec, h * w).map_err(|e| MaskGenError::Exchange {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            let area = flat.iter().map(|&b| b as usize).sum();
            if area < p.min_area {
                continue;
            }
            let mask2d = Array2::from_shape_vec((h, w), flat).expect("shape checked");
            proposals.push(SeedProposal2D {
                axis: view.axis,
                slice_index: idx,
                mask2d,
                area,
            });
            per_slice += 1;
        }
    }
    Ok(proposals)
}
