//! Connected-component labeling for 2D slices and 3D masks.

use ndarray::{Array2, Array3};

/// Label 26-connected components of a binary 3D array. Returns the label
/// image (0 = background, components numbered from 1) and the component
/// count. Labeling order is deterministic (scan order of the first voxel).
pub fn label_components_3d(mask: &Array3<u8>) -> (Array3<u32>, u32) {
    let (d0, d1, d2) = mask.dim();
    let src = mask.as_standard_layout();
    let flat = src.as_slice().unwrap();
    let mut labels = vec![0u32; flat.len()];
    let mut next = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    let (s0, s1) = (d1 * d2, d2);
    for start in 0..flat.len() {
        if flat[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let a = p / s0;
            let rem = p % s0;
            let b = rem / s1;
            let c = rem % s1;
            for da in a.saturating_sub(1)..=(a + 1).min(d0 - 1) {
                for db in b.saturating_sub(1)..=(b + 1).min(d1 - 1) {
                    let row = da * s0 + db * s1;
                    for dc in c.saturating_sub(1)..=(c + 1).min(d2 - 1) {
                        let q = row + dc;
                        if flat[q] != 0 && labels[q] == 0 {
                            labels[q] = next;
                            stack.push(q);
                        }
                    }
                }
            }
        }
    }
    let labels = Array3::from_shape_vec((d0, d1, d2), labels).expect("shape preserved");
    (labels, next)
}

/// True when the binary array has exactly one 26-connected component.
pub fn is_connected_3d(mask: &Array3<u8>) -> bool {
    label_components_3d(mask).1 == 1
}

/// Label 8-connected components of a binary 2D array.
pub fn label_components_2d(mask: &Array2<u8>) -> (Array2<u32>, u32) {
    let (h, w) = mask.dim();
    let mut labels = Array2::<u32>::zeros((h, w));
    let mut next = 0u32;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for i in 0..h {
        for j in 0..w {
            if mask[(i, j)] == 0 || labels[(i, j)] != 0 {
                continue;
            }
            next += 1;
            labels[(i, j)] = next;
            stack.push((i, j));
            while let Some((a, b)) = stack.pop() {
                for da in -1i64..=1 {
                    for db in -1i64..=1 {
                        if da == 0 && db == 0 {
                            continue;
                        }
                        let (na, nb) = (a as i64 + da, b as i64 + db);
                        if na < 0 || nb < 0 || na >= h as i64 || nb >= w as i64 {
                            continue;
                        }
                        let n = (na as usize, nb as usize);
                        if mask[n] != 0 && labels[n] == 0 {
                            labels[n] = next;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    (labels, next)
}
