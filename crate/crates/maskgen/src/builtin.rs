//! The built-in classical 2D proposal backend: quantize slice luminance
//! into a small number of levels, take connected components per level, then
//! hierarchically merge adjacent components with similar means, emitting a
//! proposal at every merge granularity. Runs fully offline and is
//! deterministic given the seeded RNG.

use mass_core::components::label_components_2d;
use ndarray::{Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, BinaryHeap};

use crate::config::MaskGenConfig;

/// A 2D proposal on a seed slice.
#[derive(Debug, Clone)]
pub struct SeedProposal2D {
    pub axis: usize,
    pub slice_index: usize,
    pub mask2d: Array2<u8>,
    pub area: usize,
}

/// One extracted region (used internally and by 3D propagation).
#[derive(Debug, Clone)]
pub struct Region2D {
    pub pixels: Vec<(u32, u32)>,
    pub area: usize,
    pub mean: f64,
}

impl Region2D {
    pub fn to_mask(&self, shape: (usize, usize)) -> Array2<u8> {
        let mut m = Array2::<u8>::zeros(shape);
        for &(i, j) in &self.pixels {
            m[(i as usize, j as usize)] = 1;
        }
        m
    }
}

// Heap entry ordered so the smallest gap pops first; ties resolved by the
// (a, b) root pair for determinism.
#[derive(PartialEq)]
struct MergeCandidate {
    gap: f64,
    a: usize,
    b: usize,
}

impl Eq for MergeCandidate {}

impl Ord for MergeCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed: BinaryHeap is a max-heap, we want the smallest gap first
        other
            .gap
            .total_cmp(&self.gap)
            .then(other.a.cmp(&self.a))
            .then(other.b.cmp(&self.b))
    }
}

impl PartialOrd for MergeCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Forest {
    parent: Vec<usize>,
}

impl Forest {
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
}

/// Extract candidate regions from a luminance slice, optionally restricted
/// to a binary footprint. Emits every initial component plus every merge
/// granularity; only regions with `area >= min_area` are returned.
pub fn extract_regions(
    lum: &Array2<f32>,
    footprint: Option<&Array2<u8>>,
    levels: usize,
    merge_threshold: f32,
    min_area: usize,
) -> Vec<Region2D> {
    let (h, w) = lum.dim();
    let in_domain = |i: usize, j: usize| footprint.map_or(true, |f| f[(i, j)] != 0);

    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    let mut domain_count = 0usize;
    for i in 0..h {
        for j in 0..w {
            if in_domain(i, j) {
                lo = lo.min(lum[(i, j)]);
                hi = hi.max(lum[(i, j)]);
                domain_count += 1;
            }
        }
    }
    if domain_count == 0 {
        return Vec::new();
    }

    // bin assignment; a flat domain is a single bin
    let span = hi - lo;
    let mut bins = Array2::<i32>::from_elem((h, w), -1);
    for i in 0..h {
        for j in 0..w {
            if in_domain(i, j) {
                bins[(i, j)] = if span <= 0.0 {
                    0
                } else {
                    (((lum[(i, j)] - lo) / span * levels as f32) as usize).min(levels - 1) as i32
                };
            }
        }
    }

    // connected components per level (8-connectivity within a bin)
    let mut label_of = Array2::<u32>::zeros((h, w));
    let mut next = 0u32;
    let mut regions: Vec<Region2D> = Vec::new();
    for level in 0..levels as i32 {
        let mask = Array2::from_shape_fn((h, w), |(i, j)| (bins[(i, j)] == level) as u8);
        let (labels, n) = label_components_2d(&mask);
        if n == 0 {
            continue;
        }
        let base = next;
        next += n;
        regions.resize_with(next as usize, || Region2D {
            pixels: Vec::new(),
            area: 0,
            mean: 0.0,
        });
        for i in 0..h {
            for j in 0..w {
                if labels[(i, j)] != 0 {
                    let id = base + labels[(i, j)] - 1;
                    label_of[(i, j)] = id + 1;
                    let r = &mut regions[id as usize];
                    r.pixels.push((i as u32, j as u32));
                    r.area += 1;
                    r.mean += lum[(i, j)] as f64;
                }
            }
        }
    }
    let n_initial = regions.len();
    let mut sums: Vec<f64> = regions.iter().map(|r| r.mean).collect();
    let mut areas: Vec<usize> = regions.iter().map(|r| r.area).collect();
    for r in regions.iter_mut() {
        r.mean /= r.area as f64;
    }

    // adjacency between distinct initial labels (8-connectivity)
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_initial];
    for i in 0..h {
        for j in 0..w {
            let a = label_of[(i, j)];
            if a == 0 {
                continue;
            }
            for (di, dj) in [(0i64, 1i64), (1, -1), (1, 0), (1, 1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= h as i64 || nj >= w as i64 {
                    continue;
                }
                let b = label_of[(ni as usize, nj as usize)];
                if b != 0 && b != a {
                    neighbors[(a - 1) as usize].insert((b - 1) as usize);
                    neighbors[(b - 1) as usize].insert((a - 1) as usize);
                }
            }
        }
    }

    // hierarchical merge, emitting the union at each granularity
    let mut forest = Forest {
        parent: (0..n_initial).collect(),
    };
    let mut pixels: Vec<Vec<(u32, u32)>> = regions.iter().map(|r| r.pixels.clone()).collect();
    let mut heap = BinaryHeap::new();
    let mut emitted: Vec<Region2D> = regions.clone();
    let gap_of = |sums: &[f64], areas: &[usize], a: usize, b: usize| {
        (sums[a] / areas[a] as f64 - sums[b] / areas[b] as f64).abs()
    };
    for a in 0..n_initial {
        for &b in neighbors[a].iter() {
            if a < b {
                let gap = gap_of(&sums, &areas, a, b);
                if gap < merge_threshold as f64 {
                    heap.push(MergeCandidate { gap, a, b });
                }
            }
        }
    }
    while let Some(MergeCandidate { gap, a, b }) = heap.pop() {
        if forest.find(a) != a || forest.find(b) != b {
            continue; // stale: one side was already merged away
        }
        let fresh = gap_of(&sums, &areas, a, b);
        if (fresh - gap).abs() > 1e-12 {
            continue; // stale gap, a fresh entry is in the heap
        }
        if !neighbors[a].contains(&b) {
            continue;
        }
        // merge b into a (a < b by construction)
        forest.parent[b] = a;
        sums[a] += sums[b];
        areas[a] += areas[b];
        let moved = std::mem::take(&mut pixels[b]);
        pixels[a].extend(moved);
        // canonicalize the union's adjacency onto root a
        let b_neighbors = std::mem::take(&mut neighbors[b]);
        let mut merged = BTreeSet::new();
        for x in neighbors[a].clone().into_iter().chain(b_neighbors) {
            let r = forest.find(x);
            if r != a {
                merged.insert(r);
            }
        }
        neighbors[a] = merged;
        let nbs: Vec<usize> = neighbors[a].iter().copied().collect();
        for &nb in &nbs {
            neighbors[nb].remove(&b);
            neighbors[nb].insert(a);
        }
        emitted.push(Region2D {
            pixels: pixels[a].clone(),
            area: areas[a],
            mean: sums[a] / areas[a] as f64,
        });
        for &nb in &nbs {
            let (x, y) = (a.min(nb), a.max(nb));
            let g = gap_of(&sums, &areas, x, y);
            if g < merge_threshold as f64 {
                heap.push(MergeCandidate { gap: g, a: x, b: y });
            }
        }
    }

    emitted.retain(|r| r.area >= min_area);
    emitted
}

/// Mean-of-channels luminance of a `[3, h, w]` slice image.
pub fn luminance_of(slice3ch: &Array3<f32>) -> Array2<f32> {
    let (_, h, w) = slice3ch.dim();
    Array2::from_shape_fn((h, w), |(i, j)| {
        (slice3ch[(0, i, j)] + slice3ch[(1, i, j)] + slice3ch[(2, i, j)]) / 3.0
    })
}

/// Built-in automatic 2D proposal generation for one slice.
///
/// When more than `max_masks_per_slice` regions survive, a size-stratified
/// sample is kept: survivors are ranked by area, split into four rank
/// strata, and drawn round-robin with the seeded RNG so every granularity
/// stays represented.
pub fn propose_2d(
    slice3ch: &Array3<f32>,
    cfg: &MaskGenConfig,
    axis: usize,
    slice_index: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<SeedProposal2D> {
    let lum = luminance_of(slice3ch);
    let p = &cfg.backend_params;
    let regions = extract_regions(
        &lum,
        None,
        p.intensity_levels,
        p.merge_threshold,
        p.min_area,
    );
    let shape = lum.dim();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by(|&x, &y| regions[y].area.cmp(&regions[x].area).then(x.cmp(&y)));

    let keep: Vec<usize> = if regions.len() <= cfg.max_masks_per_slice {
        order
    } else {
        let n_strata = 4usize.min(order.len());
        let stratum_len = order.len().div_ceil(n_strata);
        let mut strata: Vec<Vec<usize>> = order
            .chunks(stratum_len)
            .map(|chunk| chunk.to_vec())
            .collect();
        let mut keep = Vec::with_capacity(cfg.max_masks_per_slice);
        let mut s = 0usize;
        let n_strata_total = strata.len();
        while keep.len() < cfg.max_masks_per_slice {
            if strata.iter().all(|v| v.is_empty()) {
                break;
            }
            let stratum = &mut strata[s % n_strata_total];
            if !stratum.is_empty() {
                let pick = rng.gen_range(0..stratum.len());
                keep.push(stratum.swap_remove(pick));
            }
            s += 1;
        }
        keep.sort_unstable();
        keep
    };

    keep.into_iter()
        .map(|i| SeedProposal2D {
            axis,
            slice_index,
            mask2d: regions[i].to_mask(shape),
            area: regions[i].area,
        })
        .collect()
}

/// Chebyshev (square) dilation by `radius`, via two separable passes.
pub fn dilate_2d(mask: &Array2<u8>, radius: usize) -> Array2<u8> {
    let (h, w) = mask.dim();
    let r = radius as i64;
    let mut rows = Array2::<u8>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            if mask[(i, j)] != 0 {
                let lo = (j as i64 - r).max(0) as usize;
                let hi = (j as i64 + r).min(w as i64 - 1) as usize;
                for jj in lo..=hi {
                    rows[(i, jj)] = 1;
                }
            }
        }
    }
    let mut out = Array2::<u8>::zeros((h, w));
    for j in 0..w {
        for i in 0..h {
            if rows[(i, j)] != 0 {
                let lo = (i as i64 - r).max(0) as usize;
                let hi = (i as i64 + r).min(h as i64 - 1) as usize;
                for ii in lo..=hi {
                    out[(ii, j)] = 1;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mass_core::rng::substream;
    use ndarray::Array3 as A3;

    fn as_3ch(lum: &Array2<f32>) -> A3<f32> {
        let (h, w) = lum.dim();
        A3::from_shape_fn((3, h, w), |(_, i, j)| lum[(i, j)])
    }

    #[test]
    fn uniform_slice_yields_at_most_one_proposal() {
        let lum = Array2::<f32>::from_elem((32, 32), 80.0);
        let cfg = MaskGenConfig::default();
        let mut rng = substream(0, "test");
        let props = propose_2d(&as_3ch(&lum), &cfg, 0, 0, &mut rng);
        assert!(props.len() <= 1);
        if let Some(p) = props.first() {
            assert_eq!(p.area, 32 * 32); // the whole plane
        }
    }

    #[test]
    fn two_disks_are_both_proposed() {
        let mut lum = Array2::<f32>::from_elem((48, 48), 20.0);
        let mut disk = |ci: f32, cj: f32, r: f32, val: f32, lum: &mut Array2<f32>| {
            for i in 0..48 {
                for j in 0..48 {
                    if (i as f32 - ci).powi(2) + (j as f32 - cj).powi(2) <= r * r {
                        lum[(i, j)] = val;
                    }
                }
            }
        };
        disk(14.0, 14.0, 7.0, 200.0, &mut lum);
        disk(33.0, 33.0, 8.0, 220.0, &mut lum);
        let cfg = MaskGenConfig::default();
        let mut rng = substream(1, "test");
        let props = propose_2d(&as_3ch(&lum), &cfg, 0, 5, &mut rng);
        assert!(props.len() >= 2, "got {} proposals", props.len());
        // best proposal for each disk has high overlap
        for (ci, cj, r) in [(14.0f32, 14.0f32, 7.0f32), (33.0, 33.0, 8.0)] {
            let gt = Array2::from_shape_fn((48, 48), |(i, j)| {
                (((i as f32 - ci).powi(2) + (j as f32 - cj).powi(2)) <= r * r) as u8
            });
            let gt_area: usize = gt.iter().map(|&v| v as usize).sum();
            let best = props
                .iter()
                .map(|p| {
                    let inter: usize = p
                        .mask2d
                        .iter()
                        .zip(gt.iter())
                        .map(|(&a, &b)| (a & b) as usize)
                        .sum();
                    2.0 * inter as f64 / (p.area + gt_area) as f64
                })
                .fold(0.0f64, f64::max);
            assert!(best >= 0.9, "disk at ({ci},{cj}) best dice {best}");
        }
    }

    #[test]
    fn cap_is_enforced_and_deterministic() {
        // checkerboard of many small squares forces the cap
        let mut lum = Array2::<f32>::zeros((64, 64));
        for i in 0..64 {
            for j in 0..64 {
                let cell = (i / 4 + j / 4) % 2;
                let block = (i / 8) * 8 + j / 8;
                lum[(i, j)] = cell as f32 * 120.0 + (block % 3) as f32 * 40.0;
            }
        }
        let mut cfg = MaskGenConfig::default();
        cfg.max_masks_per_slice = 10;
        cfg.backend_params.min_area = 4;
        let a = propose_2d(&as_3ch(&lum), &cfg, 0, 0, &mut substream(3, "t"));
        let b = propose_2d(&as_3ch(&lum), &cfg, 0, 0, &mut substream(3, "t"));
        assert!(a.len() <= 10);
        assert!(!a.is_empty());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.mask2d, y.mask2d);
        }
    }

    #[test]
    fn min_area_filters_specks() {
        let mut lum = Array2::<f32>::from_elem((32, 32), 10.0);
        lum[(5, 5)] = 250.0; // single bright pixel
        let cfg = MaskGenConfig::default(); // min_area 16
        let props = propose_2d(&as_3ch(&lum), &cfg, 0, 0, &mut substream(0, "t"));
        assert!(props.iter().all(|p| p.area >= 16));
        assert!(props
            .iter()
            .all(|p| p.mask2d[(5, 5)] == 0 || p.area > 1));
    }

    #[test]
    fn merge_emits_union_granularity() {
        // two adjacent strips with close means merge into one region
        let mut lum = Array2::<f32>::from_elem((16, 16), 0.0);
        for i in 0..16 {
            for j in 0..8 {
                lum[(i, j)] = 200.0;
            }
            for j in 8..16 {
                lum[(i, j)] = 214.0;
            }
        }
        let regions = extract_regions(&lum, None, 12, 24.0, 1);
        // expect: strip A, strip B, and their union
        assert!(regions.iter().any(|r| r.area == 256));
        assert!(regions.iter().filter(|r| r.area == 128).count() >= 2);
    }

    #[test]
    fn footprint_restricts_extraction() {
        let lum = Array2::<f32>::from_shape_fn((16, 16), |(i, _)| i as f32 * 10.0);
        let mut fp = Array2::<u8>::zeros((16, 16));
        for i in 4..8 {
            for j in 4..8 {
                fp[(i, j)] = 1;
            }
        }
        let regions = extract_regions(&lum, Some(&fp), 4, 5.0, 1);
        for r in &regions {
            for &(i, j) in &r.pixels {
                assert!(fp[(i as usize, j as usize)] == 1);
            }
        }
    }

    #[test]
    fn dilation_grows_by_radius() {
        let mut m = Array2::<u8>::zeros((9, 9));
        m[(4, 4)] = 1;
        let d = dilate_2d(&m, 3);
        let count: usize = d.iter().map(|&v| v as usize).sum();
        assert_eq!(count, 49); // 7x7 square
        assert_eq!(d[(1, 1)], 1);
        assert_eq!(d[(0, 0)], 0);
    }
}
