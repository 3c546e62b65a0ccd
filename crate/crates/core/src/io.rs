//! Volume I/O: NIfTI-1 (.nii / .nii.gz) and a raw fallback consisting of a
//! JSON header plus a contiguous little-endian float32 voxel blob.
//!
//! NIfTI support is deliberately a subset: single-channel 3D images, the
//! common scalar datatypes, either endianness on read, little-endian
//! float32 on write. The modality tag rides in the header's `descrip`
//! field as `modality=CT|MR|PET|SYNTH`.

use crate::error::{CoreError, Result};
use crate::types::{Modality, Volume};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

/// JSON header of the raw fallback format.
#[derive(Debug, Serialize, Deserialize)]
pub struct RawHeader {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub modality: String,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

fn stem_of(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().to_string());
    let mut stem = name.unwrap_or_else(|| "volume".to_string());
    for ext in [".nii.gz", ".nii", ".json", ".raw"] {
        if let Some(s) = stem.strip_suffix(ext) {
            stem = s.to_string();
            break;
        }
    }
    stem
}

// ---------------------------------------------------------------------------
// Raw fallback
// ---------------------------------------------------------------------------

/// Write `<path>` (JSON header) and the sibling `.raw` voxel blob.
pub fn save_volume_raw(v: &Volume, json_path: &Path) -> Result<()> {
    let raw_path = json_path.with_extension("raw");
    let header = RawHeader {
        shape: v.shape(),
        spacing: v.spacing,
        modality: v.modality.as_str().to_string(),
        dtype: "float32-le".to_string(),
        id: Some(v.id.clone()),
    };
    let json =
        serde_json::to_string_pretty(&header).map_err(|e| CoreError::json(json_path, e))?;
    fs::write(json_path, json).map_err(|e| CoreError::io(json_path, e))?;
    let flat = v.voxels.as_standard_layout();
    let mut bytes = Vec::with_capacity(flat.len() * 4);
    for &val in flat.iter() {
        bytes.extend_from_slice(&val.to_le_bytes());
    }
    fs::write(&raw_path, bytes).map_err(|e| CoreError::io(&raw_path, e))
}

/// Load a raw-format volume from its JSON header path.
pub fn load_volume_raw(json_path: &Path) -> Result<Volume> {
    let json = fs::read_to_string(json_path).map_err(|e| CoreError::io(json_path, e))?;
    let header: RawHeader =
        serde_json::from_str(&json).map_err(|e| CoreError::json(json_path, e))?;
    if header.dtype != "float32-le" {
        return Err(CoreError::Malformed {
            what: "raw volume header",
            detail: format!("unsupported dtype '{}' (expected float32-le)", header.dtype),
        });
    }
    let raw_path = json_path.with_extension("raw");
    let bytes = fs::read(&raw_path).map_err(|e| CoreError::io(&raw_path, e))?;
    let n = header.shape.iter().product::<usize>();
    if bytes.len() != n * 4 {
        return Err(CoreError::Malformed {
            what: "raw volume blob",
            detail: format!("expected {} bytes for shape {:?}, found {}", n * 4, header.shape, bytes.len()),
        });
    }
    let mut flat = Vec::with_capacity(n);
    for chunk in bytes.chunks_exact(4) {
        flat.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    let voxels = Array3::from_shape_vec(
        (header.shape[0], header.shape[1], header.shape[2]),
        flat,
    )
    .map_err(|e| CoreError::Malformed {
        what: "raw volume blob",
        detail: e.to_string(),
    })?;
    let id = header.id.unwrap_or_else(|| stem_of(json_path));
    Volume::new(voxels, header.spacing, Modality::parse(&header.modality)?, id)
}

// ---------------------------------------------------------------------------
// NIfTI-1 subset
// ---------------------------------------------------------------------------

const NIFTI_VOX_OFFSET: usize = 352;

mod dt {
    pub const UINT8: i16 = 2;
    pub const INT16: i16 = 4;
    pub const INT32: i16 = 8;
    pub const FLOAT32: i16 = 16;
    pub const FLOAT64: i16 = 64;
    pub const UINT16: i16 = 512;
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    swap: bool,
}

impl<'a> HeaderReader<'a> {
    fn i16_at(&self, off: usize) -> i16 {
        let raw: [u8; 2] = self.bytes[off..off + 2].try_into().unwrap();
        if self.swap {
            i16::from_be_bytes(raw)
        } else {
            i16::from_le_bytes(raw)
        }
    }
    fn f32_at(&self, off: usize) -> f32 {
        let raw: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        if self.swap {
            f32::from_be_bytes(raw)
        } else {
            f32::from_le_bytes(raw)
        }
    }
}

fn nifti_malformed(detail: String) -> CoreError {
    CoreError::Malformed {
        what: "nifti header",
        detail,
    }
}

fn is_gz(path: &Path) -> bool {
    path.to_string_lossy().ends_with(".gz")
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    if is_gz(path) {
        let mut out = Vec::new();
        MultiGzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| CoreError::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Load a NIfTI-1 volume. The modality comes from a `modality=` tag in the
/// header description when present, else from `fallback`, else errors.
pub fn load_volume_nifti(path: &Path, fallback: Option<Modality>) -> Result<Volume> {
    let data = read_all(path)?;
    if data.len() < NIFTI_VOX_OFFSET {
        return Err(nifti_malformed(format!(
            "file too short ({} bytes)",
            data.len()
        )));
    }
    let magic_le = i32::from_le_bytes(data[0..4].try_into().unwrap());
    let swap = match magic_le {
        348 => false,
        _ if i32::from_be_bytes(data[0..4].try_into().unwrap()) == 348 => true,
        other => {
            return Err(nifti_malformed(format!(
                "sizeof_hdr is {other}, expected 348"
            )))
        }
    };
    let h = HeaderReader {
        bytes: &data,
        swap,
    };
    if &data[344..347] != b"n+1" && &data[344..347] != b"ni1" {
        return Err(nifti_malformed("bad magic (expected n+1 or ni1)".into()));
    }
    let ndim = h.i16_at(40);
    if !(1..=7).contains(&ndim) {
        return Err(nifti_malformed(format!("bad ndim {ndim}")));
    }
    // require a 3D image (higher dims allowed only if extent 1)
    let mut dims = [1usize; 7];
    for (i, d) in dims.iter_mut().enumerate() {
        if (i as i16) < ndim {
            let v = h.i16_at(42 + 2 * i);
            if v < 1 {
                return Err(nifti_malformed(format!("dim[{}] = {v}", i + 1)));
            }
            *d = v as usize;
        }
    }
    if dims[3..].iter().any(|&d| d != 1) {
        return Err(nifti_malformed(
            "only single-channel 3D images are supported".into(),
        ));
    }
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let datatype = h.i16_at(70);
    let pix = [h.f32_at(80) as f64, h.f32_at(84) as f64, h.f32_at(88) as f64];
    let vox_offset = h.f32_at(108) as usize;
    let mut slope = h.f32_at(112);
    let inter = h.f32_at(116);
    if slope == 0.0 {
        slope = 1.0;
    }
    let descrip = String::from_utf8_lossy(&data[148..228]).to_string();
    let n = nx * ny * nz;
    let body = data
        .get(vox_offset..)
        .ok_or_else(|| nifti_malformed(format!("vox_offset {vox_offset} out of range")))?;

    let take = |width: usize| -> Result<&[u8]> {
        body.get(..n * width).ok_or_else(|| {
            nifti_malformed(format!(
                "voxel data truncated: need {} bytes, have {}",
                n * width,
                body.len()
            ))
        })
    };
    let mut flat = Vec::with_capacity(n);
    macro_rules! read_voxels {
        ($ty:ty, $width:expr) => {{
            for chunk in take($width)?.chunks_exact($width) {
                let raw: [u8; $width] = chunk.try_into().unwrap();
                let v = if swap {
                    <$ty>::from_be_bytes(raw)
                } else {
                    <$ty>::from_le_bytes(raw)
                };
                flat.push(v as f32 * slope + inter);
            }
        }};
    }
    match datatype {
        dt::UINT8 => read_voxels!(u8, 1),
        dt::INT16 => read_voxels!(i16, 2),
        dt::UINT16 => read_voxels!(u16, 2),
        dt::INT32 => read_voxels!(i32, 4),
        dt::FLOAT32 => read_voxels!(f32, 4),
        dt::FLOAT64 => {
            for chunk in take(8)?.chunks_exact(8) {
                let raw: [u8; 8] = chunk.try_into().unwrap();
                let v = if swap {
                    f64::from_be_bytes(raw)
                } else {
                    f64::from_le_bytes(raw)
                };
                flat.push(v as f32 * slope + inter);
            }
        }
        other => {
            return Err(nifti_malformed(format!(
                "unsupported datatype code {other}"
            )))
        }
    }

    // NIfTI stores x fastest; our axis 2 is fastest, so logical shape is
    // (nz, ny, nx) with spacing reversed to match.
    let mut voxels = Array3::<f32>::zeros((nz, ny, nx));
    {
        let slice = voxels.as_slice_mut().unwrap();
        // flat is x-fastest: index = x + nx*(y + ny*z); ours is z-major
        for z in 0..nz {
            for y in 0..ny {
                let src = nx * (y + ny * z);
                let dst = nx * (y + ny * z);
                slice[dst..dst + nx].copy_from_slice(&flat[src..src + nx]);
            }
        }
    }
    let spacing = [pix[2].max(0.0), pix[1].max(0.0), pix[0].max(0.0)];
    let modality = descrip
        .split(|c: char| c == ';' || c == '\0' || c.is_whitespace())
        .find_map(|tok| tok.strip_prefix("modality="))
        .map(Modality::parse)
        .transpose()?
        .or(fallback)
        .ok_or_else(|| {
            CoreError::InvalidParameter(format!(
                "{}: no modality tag in header and no fallback given",
                path.display()
            ))
        })?;
    Volume::new(voxels, spacing, modality, stem_of(path))
}

/// Write a volume as little-endian float32 NIfTI-1 (.nii, or .nii.gz when
/// the path ends in .gz).
pub fn save_volume_nifti(v: &Volume, path: &Path) -> Result<()> {
    let shape = v.shape();
    let (nz, ny, nx) = (shape[0], shape[1], shape[2]);
    let mut header = vec![0u8; NIFTI_VOX_OFFSET];
    header[0..4].copy_from_slice(&348i32.to_le_bytes());
    let dims: [i16; 8] = [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (i, d) in dims.iter().enumerate() {
        header[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    header[70..72].copy_from_slice(&dt::FLOAT32.to_le_bytes());
    header[72..74].copy_from_slice(&32i16.to_le_bytes()); // bitpix
    let pixdim: [f32; 8] = [
        1.0,
        v.spacing[2] as f32,
        v.spacing[1] as f32,
        v.spacing[0] as f32,
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    for (i, p) in pixdim.iter().enumerate() {
        header[76 + 4 * i..80 + 4 * i].copy_from_slice(&p.to_le_bytes());
    }
    header[108..112].copy_from_slice(&(NIFTI_VOX_OFFSET as f32).to_le_bytes());
    header[112..116].copy_from_slice(&1.0f32.to_le_bytes()); // scl_slope
    header[123] = 10; // xyzt_units: mm | sec
    let descrip = format!("modality={}", v.modality.as_str());
    let db = descrip.as_bytes();
    header[148..148 + db.len().min(79)].copy_from_slice(&db[..db.len().min(79)]);
    header[252..254].copy_from_slice(&1i16.to_le_bytes()); // qform_code
    header[344..348].copy_from_slice(b"n+1\0");

    let flat = v.voxels.as_standard_layout();
    let mut body = Vec::with_capacity(flat.len() * 4);
    // our axis-2-fastest C order matches NIfTI x-fastest under the (z,y,x)
    // logical mapping, so the raw sequence is already in file order
    for &val in flat.iter() {
        body.extend_from_slice(&val.to_le_bytes());
    }

    let write = |path: &Path, header: &[u8], body: &[u8]| -> Result<()> {
        if is_gz(path) {
            let file = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
            let mut enc = GzEncoder::new(file, flate2::Compression::fast());
            enc.write_all(header)
                .and_then(|_| enc.write_all(body))
                .and_then(|_| enc.finish().map(|_| ()))
                .map_err(|e| CoreError::io(path, e))
        } else {
            let mut out = Vec::with_capacity(header.len() + body.len());
            out.extend_from_slice(header);
            out.extend_from_slice(body);
            fs::write(path, out).map_err(|e| CoreError::io(path, e))
        }
    };
    write(path, &header, &body)
}

/// Dispatch on extension: `.json` raw header, `.nii` / `.nii.gz` NIfTI.
pub fn load_volume(path: &Path, fallback_modality: Option<Modality>) -> Result<Volume> {
    let name = path.to_string_lossy();
    if name.ends_with(".json") {
        load_volume_raw(path)
    } else if name.ends_with(".nii") || name.ends_with(".nii.gz") {
        load_volume_nifti(path, fallback_modality)
    } else {
        Err(CoreError::InvalidParameter(format!(
            "unrecognized volume extension on '{name}' (expected .json, .nii, .nii.gz)"
        )))
    }
}

/// Dispatch on extension for saving.
pub fn save_volume(v: &Volume, path: &Path) -> Result<()> {
    let name = path.to_string_lossy();
    if name.ends_with(".json") {
        save_volume_raw(v, path)
    } else if name.ends_with(".nii") || name.ends_with(".nii.gz") {
        save_volume_nifti(v, path)
    } else {
        Err(CoreError::InvalidParameter(format!(
            "unrecognized volume extension on '{name}' (expected .json, .nii, .nii.gz)"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn demo_volume() -> Volume {
        let vox = Array3::from_shape_fn((8, 9, 10), |(i, j, k)| {
            (i as f32) * 100.0 + (j as f32) * 10.0 + k as f32 - 250.0
        });
        Volume::new(vox, [2.5, 1.0, 0.7], Modality::CT, "demo").unwrap()
    }

    #[test]
    fn raw_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = demo_volume();
        save_volume_raw(&v, &path).unwrap();
        let r = load_volume_raw(&path).unwrap();
        assert_eq!(r.voxels, v.voxels);
        assert_eq!(r.spacing, v.spacing);
        assert_eq!(r.modality, Modality::CT);
        assert_eq!(r.id, "demo");
    }

    #[test]
    fn nifti_roundtrip_plain_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        let v = demo_volume();
        for name in ["vol.nii", "vol.nii.gz"] {
            let path = dir.path().join(name);
            save_volume_nifti(&v, &path).unwrap();
            let r = load_volume_nifti(&path, None).unwrap();
            assert_eq!(r.voxels, v.voxels, "voxels differ for {name}");
            // pixdim is f32 in the container, so spacing is exact only to f32
            for a in 0..3 {
                assert_eq!(r.spacing[a], v.spacing[a] as f32 as f64);
            }
            assert_eq!(r.modality, Modality::CT);
        }
    }

    #[test]
    fn nifti_without_tag_needs_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.nii");
        let v = demo_volume();
        save_volume_nifti(&v, &path).unwrap();
        // strip the descrip field
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[148..228].fill(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_volume_nifti(&path, None).is_err());
        let r = load_volume_nifti(&path, Some(Modality::MR)).unwrap();
        assert_eq!(r.modality, Modality::MR);
    }

    #[test]
    fn truncated_nifti_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.nii");
        save_volume_nifti(&demo_volume(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        assert!(load_volume_nifti(&path, None).is_err());
    }
}
