//! Deterministic synthetic 3D "anatomy": volumes populated with ellipsoids,
//! capsule-shaped tubes, and boxes at distinct intensity levels, plus exact
//! per-structure ground-truth masks. Every acceptance test runs on these
//! phantoms, so generation is pure and integer-seeded — no time, no
//! platform dependence.

use mass_core::rng::substream;
use mass_core::{CoreError, Mask3D, MaskSource, Modality, Volume};
use ndarray::Array3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical spacing of generated phantoms (mm per voxel).
pub const PHANTOM_SPACING: [f64; 3] = [1.5, 1.5, 1.5];

/// Minimum extent of a structure along every axis, in voxels. Keeps every
/// structure wide enough that a 15 mm seed-slice raster cannot miss it.
pub const MIN_STRUCTURE_EXTENT: usize = 12;

/// CT-like background level (HU).
pub const CT_BACKGROUND: f32 = -100.0;
/// CT-like structure intensities; every entry is at least 50 HU away from
/// the background and 60 HU from its neighbours.
pub const CT_PALETTE: [f32; 7] = [-50.0, 10.0, 70.0, 130.0, 190.0, 250.0, 300.0];

/// MR-like background and palette (arbitrary units).
pub const MR_BACKGROUND: f32 = 100.0;
pub const MR_PALETTE: [f32; 5] = [250.0, 400.0, 550.0, 700.0, 850.0];

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error(
        "could not place structure {index} of {requested} within the overlap bound after \
         {attempts} attempts; try a smaller n_structures or a larger shape"
    )]
    Placement {
        index: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, PhantomError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModalityStyle {
    CtLike,
    MrLike,
}

/// Generation parameters. Same spec, same bits out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub seed: u64,
    pub shape: [usize; 3],
    pub n_structures: usize,
    pub modality_style: ModalityStyle,
    /// Gaussian noise, as a fraction of the noiseless dynamic range.
    pub noise_std: f32,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.n_structures) {
            return Err(PhantomError::InvalidSpec(format!(
                "n_structures must be in [1, 16], got {}",
                self.n_structures
            )));
        }
        if self.shape.iter().any(|&d| d < 32) {
            return Err(PhantomError::InvalidSpec(format!(
                "every shape extent must be >= 32, got {:?}",
                self.shape
            )));
        }
        if !(0.0..1.0).contains(&self.noise_std) {
            return Err(PhantomError::InvalidSpec(format!(
                "noise_std must be in [0, 1), got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    Ellipsoid,
    Tube,
    Box,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Ellipsoid => "ellipsoid",
            StructureKind::Tube => "tube",
            StructureKind::Box => "box",
        }
    }
}

/// One placed structure: its exact voxel mask plus class metadata.
#[derive(Debug, Clone)]
pub struct GtStructure {
    pub mask: Mask3D,
    pub kind: StructureKind,
    pub intensity: f32,
    /// Class label of the form `kind:intensity`, e.g. `ellipsoid:130`.
    pub label: String,
}

/// A generated phantom: the noisy volume and its ground-truth structures.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume,
    pub structures: Vec<GtStructure>,
    pub background: f32,
}

impl Phantom {
    pub fn gt_masks(&self) -> Vec<Mask3D> {
        self.structures.iter().map(|s| s.mask.clone()).collect()
    }
}

// Geometric primitive in continuous voxel coordinates.
enum Shape {
    Ellipsoid {
        center: [f64; 3],
        semi: [f64; 3],
    },
    Capsule {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
    Box {
        center: [f64; 3],
        half: [f64; 3],
    },
}

impl Shape {
    fn bbox(&self, shape: [usize; 3]) -> ([usize; 3], [usize; 3]) {
        let (lo, hi) = match self {
            Shape::Ellipsoid { center, semi } => (
                [
                    center[0] - semi[0],
                    center[1] - semi[1],
                    center[2] - semi[2],
                ],
                [
                    center[0] + semi[0],
                    center[1] + semi[1],
                    center[2] + semi[2],
                ],
            ),
            Shape::Capsule { a, b, radius } => (
                [
                    a[0].min(b[0]) - radius,
                    a[1].min(b[1]) - radius,
                    a[2].min(b[2]) - radius,
                ],
                [
                    a[0].max(b[0]) + radius,
                    a[1].max(b[1]) + radius,
                    a[2].max(b[2]) + radius,
                ],
            ),
            Shape::Box { center, half } => (
                [
                    center[0] - half[0],
                    center[1] - half[1],
                    center[2] - half[2],
                ],
                [
                    center[0] + half[0],
                    center[1] + half[1],
                    center[2] + half[2],
                ],
            ),
        };
        let mut lo_i = [0usize; 3];
        let mut hi_i = [0usize; 3];
        for a in 0..3 {
            lo_i[a] = lo[a].floor().max(0.0) as usize;
            hi_i[a] = (hi[a].ceil() as usize).min(shape[a] - 1);
        }
        (lo_i, hi_i)
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Shape::Ellipsoid { center, semi } => {
                let mut s = 0.0;
                for a in 0..3 {
                    let d = (p[a] - center[a]) / semi[a];
                    s += d * d;
                }
                s <= 1.0
            }
            Shape::Capsule { a, b, radius } => {
                let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
                let denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
                let t = if denom == 0.0 {
                    0.0
                } else {
                    ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / denom).clamp(0.0, 1.0)
                };
                let mut d2 = 0.0;
                for i in 0..3 {
                    let d = p[i] - (a[i] + t * ab[i]);
                    d2 += d * d;
                }
                d2 <= radius * radius
            }
            Shape::Box { center, half } => {
                (0..3).all(|a| (p[a] - center[a]).abs() <= half[a])
            }
        }
    }

    fn voxelize(&self, shape: [usize; 3]) -> Array3<u8> {
        let mut out = Array3::<u8>::zeros((shape[0], shape[1], shape[2]));
        let (lo, hi) = self.bbox(shape);
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    if self.contains([i as f64, j as f64, k as f64]) {
                        out[(i, j, k)] = 1;
                    }
                }
            }
        }
        out
    }
}

fn total_voxels(shape: [usize; 3]) -> f64 {
    (shape[0] * shape[1] * shape[2]) as f64
}

const MIN_FRACTION: f64 = 0.005;
const MAX_FRACTION: f64 = 0.10;
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

fn sample_center(rng: &mut ChaCha8Rng, shape: [usize; 3], margin: [f64; 3]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for a in 0..3 {
        let lo = margin[a] + 1.0;
        let hi = shape[a] as f64 - margin[a] - 2.0;
        c[a] = if hi > lo { rng.gen_range(lo..hi) } else { shape[a] as f64 / 2.0 };
    }
    c
}

fn sample_shape(rng: &mut ChaCha8Rng, kind: StructureKind, shape: [usize; 3]) -> Shape {
    let n = total_voxels(shape);
    // target a size comfortably inside [0.5%, 10%] so digitization noise
    // cannot push the realized count out of bounds
    let frac = rng.gen_range(0.008..0.06);
    let min_half = MIN_STRUCTURE_EXTENT as f64 / 2.0;
    match kind {
        StructureKind::Ellipsoid => {
            let r1: f64 = rng.gen_range(0.7..1.4);
            let r2: f64 = rng.gen_range(0.7..1.4);
            let base = (3.0 * frac * n / (4.0 * std::f64::consts::PI * r1 * r2)).cbrt();
            let semi = [
                (base * r1).max(min_half),
                (base * r2).max(min_half),
                base.max(min_half),
            ];
            let center = sample_center(rng, shape, semi);
            Shape::Ellipsoid { center, semi }
        }
        StructureKind::Tube => {
            let radius = rng.gen_range(min_half..min_half * 1.6);
            // capsule volume = pi r^2 L + 4/3 pi r^3
            let len = ((frac * n - 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3))
                / (std::f64::consts::PI * radius * radius))
                .max(radius);
            let dir = {
                // random unit vector
                let mut d;
                loop {
                    d = [
                        rng.gen_range(-1.0f64..1.0),
                        rng.gen_range(-1.0f64..1.0),
                        rng.gen_range(-1.0f64..1.0),
                    ];
                    let norm2: f64 = d.iter().map(|v| v * v).sum();
                    if norm2 > 1e-3 && norm2 <= 1.0 {
                        let norm = norm2.sqrt();
                        d = [d[0] / norm, d[1] / norm, d[2] / norm];
                        break;
                    }
                }
                d
            };
            let margin = [
                len / 2.0 * dir[0].abs() + radius,
                len / 2.0 * dir[1].abs() + radius,
                len / 2.0 * dir[2].abs() + radius,
            ];
            let center = sample_center(rng, shape, margin);
            let a = [
                center[0] - dir[0] * len / 2.0,
                center[1] - dir[1] * len / 2.0,
                center[2] - dir[2] * len / 2.0,
            ];
            let b = [
                center[0] + dir[0] * len / 2.0,
                center[1] + dir[1] * len / 2.0,
                center[2] + dir[2] * len / 2.0,
            ];
            Shape::Capsule { a, b, radius }
        }
        StructureKind::Box => {
            let r1: f64 = rng.gen_range(0.7..1.4);
            let r2: f64 = rng.gen_range(0.7..1.4);
            let base = (frac * n / (8.0 * r1 * r2)).cbrt();
            let half = [
                (base * r1).max(min_half),
                (base * r2).max(min_half),
                base.max(min_half),
            ];
            let center = sample_center(rng, shape, half);
            Shape::Box { center, half }
        }
    }
}

/// Generate a phantom volume plus exact GT masks.
///
/// Properties enforced by construction and rejection sampling:
/// every structure occupies 0.5%-10% of the volume, spans at least
/// [`MIN_STRUCTURE_EXTENT`] voxels per axis, overlaps any other structure
/// on fewer than 5% of the smaller one's voxels, and is one 26-connected
/// component (all primitives are convex).
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let mut rng = substream(spec.seed, "phantom");
    let shape = spec.shape;
    let n = total_voxels(shape);
    let (background, palette): (f32, &[f32]) = match spec.modality_style {
        ModalityStyle::CtLike => (CT_BACKGROUND, &CT_PALETTE),
        ModalityStyle::MrLike => (MR_BACKGROUND, &MR_PALETTE),
    };

    let kinds = [
        StructureKind::Ellipsoid,
        StructureKind::Tube,
        StructureKind::Box,
    ];

    let mut placed: Vec<(Array3<u8>, u64, StructureKind, f32)> = Vec::new();
    for index in 0..spec.n_structures {
        let mut attempt = 0usize;
        let voxels = loop {
            attempt += 1;
            if attempt > MAX_PLACEMENT_ATTEMPTS {
                return Err(PhantomError::Placement {
                    index,
                    requested: spec.n_structures,
                    attempts: MAX_PLACEMENT_ATTEMPTS,
                });
            }
            let kind = kinds[rng.gen_range(0..kinds.len())];
            let candidate = sample_shape(&mut rng, kind, shape).voxelize(shape);
            let count: u64 = candidate.iter().map(|&v| v as u64).sum();
            if (count as f64) < MIN_FRACTION * n || (count as f64) > MAX_FRACTION * n {
                continue;
            }
            // extent check along each axis
            let bbox = bbox_of(&candidate);
            let ok_extent = (0..3).all(|a| bbox[2 * a + 1] - bbox[2 * a] + 1 >= MIN_STRUCTURE_EXTENT);
            if !ok_extent {
                continue;
            }
            // pairwise overlap below 5% of the smaller structure
            let mut ok = true;
            for (other, other_count, _, _) in &placed {
                let inter: u64 = candidate
                    .iter()
                    .zip(other.iter())
                    .map(|(&a, &b)| (a & b) as u64)
                    .sum();
                if (inter as f64) >= 0.05 * count.min(*other_count) as f64 {
                    ok = false;
                    break;
                }
            }
            if ok {
                break (candidate, count, kind);
            }
        };
        let (candidate, count, kind) = voxels;
        let intensity = palette[rng.gen_range(0..palette.len())];
        placed.push((candidate, count, kind, intensity));
    }

    // paint: later structures win on (rare, small) overlaps
    let mut img = Array3::<f32>::from_elem((shape[0], shape[1], shape[2]), background);
    for (mask, _, _, intensity) in &placed {
        for (dst, &m) in img.iter_mut().zip(mask.iter()) {
            if m != 0 {
                *dst = *intensity;
            }
        }
    }

    // additive Gaussian noise scaled by the noiseless dynamic range
    if spec.noise_std > 0.0 {
        let lo = img.iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = img.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let sigma = spec.noise_std * (hi - lo).max(1.0);
        let normal = StandardNormal;
        for v in img.iter_mut() {
            let z: f32 = normal.sample(&mut rng);
            *v += sigma * z;
        }
    }

    let modality = match spec.modality_style {
        ModalityStyle::CtLike => Modality::CT,
        ModalityStyle::MrLike => Modality::MR,
    };
    let id = format!("phantom-{}", spec.seed);
    let volume = Volume::new(img, PHANTOM_SPACING, modality, id.clone())?;

    let structures = placed
        .into_iter()
        .map(|(voxels, _, kind, intensity)| {
            let bbox = bbox_of(&voxels);
            let seed_slice = (bbox[0] + bbox[1]) / 2;
            let mask = Mask3D::new(voxels, 0, seed_slice, MaskSource::PHANTOM, id.clone())?;
            let label = format!("{}:{}", kind.as_str(), intensity as i64);
            Ok(GtStructure {
                mask,
                kind,
                intensity,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Phantom {
        volume,
        structures,
        background,
    })
}

fn bbox_of(voxels: &Array3<u8>) -> [usize; 6] {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for ((i, j, k), &v) in voxels.indexed_iter() {
        if v != 0 {
            let idx = [i, j, k];
            for a in 0..3 {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
    }
    [lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use mass_core::components::is_connected_3d;
    use mass_core::dice_score;

    fn spec(seed: u64, n: usize) -> PhantomSpec {
        PhantomSpec {
            seed,
            shape: [64, 64, 64],
            n_structures: n,
            modality_style: ModalityStyle::CtLike,
            noise_std: 0.02,
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let a = generate_phantom(&spec(7, 3)).unwrap();
        let b = generate_phantom(&spec(7, 3)).unwrap();
        assert_eq!(a.volume.voxels, b.volume.voxels);
        assert_eq!(a.structures.len(), b.structures.len());
        for (x, y) in a.structures.iter().zip(b.structures.iter()) {
            assert_eq!(x.mask.voxels, y.mask.voxels);
            assert_eq!(x.label, y.label);
        }
    }

    #[test]
    fn noiseless_single_structure_matches_level_set() {
        let mut s = spec(11, 1);
        s.noise_std = 0.0;
        let p = generate_phantom(&s).unwrap();
        let gt = &p.structures[0].mask;
        for (&v, &m) in p.volume.voxels.iter().zip(gt.voxels.iter()) {
            assert_eq!(v != CT_BACKGROUND, m != 0);
        }
    }

    // Direct pairwise-Dice oracle over the generated GT masks.
    #[test]
    fn pairwise_gt_dice_below_bound() {
        let p = generate_phantom(&spec(0, 4)).unwrap();
        assert_eq!(p.structures.len(), 4);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d = dice_score(&p.structures[i].mask, &p.structures[j].mask).unwrap();
                assert!(d < 0.05, "pair ({i},{j}) has Dice {d}");
            }
        }
    }

    #[test]
    fn structures_are_connected_sized_and_wide() {
        for seed in [0u64, 1, 2, 3] {
            let p = generate_phantom(&spec(seed, 4)).unwrap();
            let total = 64usize.pow(3) as f64;
            for s in &p.structures {
                assert!(is_connected_3d(&s.mask.voxels), "seed {seed}");
                let count = s.mask.voxel_count() as f64;
                assert!(count >= 0.005 * total && count <= 0.10 * total);
                let bb = s.mask.bounding_box().unwrap();
                for a in 0..3 {
                    assert!(bb[2 * a + 1] - bb[2 * a] + 1 >= MIN_STRUCTURE_EXTENT);
                }
            }
        }
    }

    #[test]
    fn ct_intensities_within_contract() {
        let mut s = spec(5, 4);
        s.noise_std = 0.0;
        let p = generate_phantom(&s).unwrap();
        for st in &p.structures {
            assert!((-50.0..=300.0).contains(&st.intensity));
            assert!((st.intensity - CT_BACKGROUND).abs() >= 30.0);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate_phantom(&PhantomSpec {
            seed: 0,
            shape: [64, 64, 64],
            n_structures: 0,
            modality_style: ModalityStyle::CtLike,
            noise_std: 0.0,
        })
        .is_err());
        assert!(generate_phantom(&PhantomSpec {
            seed: 0,
            shape: [31, 64, 64],
            n_structures: 1,
            modality_style: ModalityStyle::CtLike,
            noise_std: 0.0,
        })
        .is_err());
    }

    #[test]
    fn crowded_spec_reports_placement_error() {
        // 16 structures of >=0.5% each cannot avoid overlap in a tiny volume
        let s = PhantomSpec {
            seed: 3,
            shape: [32, 32, 32],
            n_structures: 16,
            modality_style: ModalityStyle::CtLike,
            noise_std: 0.0,
        };
        match generate_phantom(&s) {
            Err(PhantomError::Placement { .. }) => {}
            Ok(p) => {
                // if it fits, the overlap bound must still hold
                for i in 0..p.structures.len() {
                    for j in (i + 1)..p.structures.len() {
                        let d =
                            dice_score(&p.structures[i].mask, &p.structures[j].mask).unwrap();
                        assert!(d < 0.05);
                    }
                }
            }
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
