//! Mask banks: the ordered set of auto-generated masks for one volume,
//! persisted as a directory with `manifest.json` and `masks.rle`.
//!
//! `manifest.json` is schema-versioned and lists per-mask metadata plus a
//! CRC32 of each mask's RLE record; `masks.rle` is the concatenation of the
//! records in manifest order.

use crate::error::{CoreError, Result};
use crate::metrics::iou_voxels;
use crate::rle;
use crate::types::{Mask3D, MaskSource};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const BANK_SCHEMA_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RLE_FILE: &str = "masks.rle";

/// Per-mask metadata stored in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskMeta {
    pub index: u32,
    pub voxel_count: u64,
    /// Inclusive foreground bounds `[lo0, hi0, lo1, hi1, lo2, hi2]`;
    /// all zeros for an empty mask.
    pub bbox: [usize; 6],
    pub seed_axis: usize,
    pub seed_slice: usize,
    pub source: MaskSource,
    /// Optional class label (used by phantom ground truth).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub crc32: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankManifest {
    pub schema_version: u32,
    pub volume_id: String,
    pub shape: [usize; 3],
    pub masks: Vec<MaskMeta>,
}

/// Ordered collection of binary masks sharing one volume id and shape.
#[derive(Debug, Clone)]
pub struct MaskBank {
    pub masks: Vec<Mask3D>,
    pub manifest: BankManifest,
}

impl MaskBank {
    pub fn new(volume_id: impl Into<String>, shape: [usize; 3]) -> Self {
        MaskBank {
            masks: Vec::new(),
            manifest: BankManifest {
                schema_version: BANK_SCHEMA_VERSION,
                volume_id: volume_id.into(),
                shape,
                masks: Vec::new(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Append a mask, computing its metadata entry.
    pub fn push(&mut self, mask: Mask3D, label: Option<String>) -> Result<()> {
        if mask.shape() != self.manifest.shape {
            return Err(CoreError::ShapeMismatch(format!(
                "bank shape {:?} vs mask shape {:?}",
                self.manifest.shape,
                mask.shape()
            )));
        }
        if mask.volume_id != self.manifest.volume_id {
            return Err(CoreError::InvalidParameter(format!(
                "bank volume '{}' vs mask volume '{}'",
                self.manifest.volume_id, mask.volume_id
            )));
        }
        let index = self.masks.len() as u32;
        let record = rle::encode_record(&mask.voxels, index);
        self.manifest.masks.push(MaskMeta {
            index,
            voxel_count: mask.voxel_count(),
            bbox: mask.bounding_box().unwrap_or([0; 6]),
            seed_axis: mask.seed_axis,
            seed_slice: mask.seed_slice,
            source: mask.source,
            label,
            crc32: crc32fast::hash(&record),
        });
        self.masks.push(mask);
        Ok(())
    }

    /// Write `manifest.json` + `masks.rle` into `dir` (created if needed).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
        let mut blob = Vec::new();
        for (i, mask) in self.masks.iter().enumerate() {
            blob.extend_from_slice(&rle::encode_record(&mask.voxels, i as u32));
        }
        let rle_path = dir.join(RLE_FILE);
        fs::write(&rle_path, &blob).map_err(|e| CoreError::io(&rle_path, e))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CoreError::json(&manifest_path, e))?;
        fs::write(&manifest_path, json).map_err(|e| CoreError::io(&manifest_path, e))?;
        Ok(())
    }

    /// Load a bank directory, verifying the schema version and every
    /// per-record CRC32. A corrupted record is reported by mask index.
    pub fn load(dir: &Path) -> Result<MaskBank> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let json = fs::read_to_string(&manifest_path)
            .map_err(|e| CoreError::io(&manifest_path, e))?;
        let manifest: BankManifest =
            serde_json::from_str(&json).map_err(|e| CoreError::json(&manifest_path, e))?;
        if manifest.schema_version != BANK_SCHEMA_VERSION {
            return Err(CoreError::SchemaVersion {
                found: manifest.schema_version,
                supported: BANK_SCHEMA_VERSION,
            });
        }
        let rle_path = dir.join(RLE_FILE);
        let blob = fs::read(&rle_path).map_err(|e| CoreError::io(&rle_path, e))?;
        let mut offset = 0usize;
        let mut masks = Vec::with_capacity(manifest.masks.len());
        for meta in &manifest.masks {
            let start = offset;
            let rec = rle::decode_record(&blob, &mut offset)?;
            let crc = crc32fast::hash(&blob[start..offset]);
            if crc != meta.crc32 {
                return Err(CoreError::Checksum {
                    index: meta.index,
                    stored: meta.crc32,
                    computed: crc,
                });
            }
            if rec.index != meta.index {
                return Err(CoreError::Malformed {
                    what: "mask bank",
                    detail: format!(
                        "record index {} does not match manifest index {}",
                        rec.index, meta.index
                    ),
                });
            }
            let voxels = rle::record_to_voxels(&rec, manifest.shape)?;
            masks.push(Mask3D {
                voxels,
                seed_axis: meta.seed_axis,
                seed_slice: meta.seed_slice,
                source: meta.source,
                volume_id: manifest.volume_id.clone(),
            });
        }
        Ok(MaskBank { masks, manifest })
    }

    /// Exhaustive all-pairs IoU check against the dedup bound.
    pub fn max_pairwise_iou(&self) -> Result<f64> {
        let mut max = 0.0f64;
        for i in 0..self.masks.len() {
            for j in (i + 1)..self.masks.len() {
                max = max.max(iou_voxels(&self.masks[i].voxels, &self.masks[j].voxels)?);
            }
        }
        Ok(max)
    }
}
