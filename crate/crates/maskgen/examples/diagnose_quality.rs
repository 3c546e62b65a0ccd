//! Per-structure diagnosis: seed-slice hits, 2D proposal quality on those
//! slices, and propagated mask quality (dev tool).

use mass_maskgen::{propose_2d, ChannelView, MaskGenConfig};
use mass_phantom::{generate_phantom, ModalityStyle, PhantomSpec};
use ndarray::Axis;

fn main() {
    let spec = PhantomSpec {
        seed: 0,
        shape: [64, 64, 64],
        n_structures: 4,
        modality_style: ModalityStyle::CtLike,
        noise_std: 0.02,
    };
    let phantom = generate_phantom(&spec).unwrap();
    let cfg = MaskGenConfig::default();
    let view = ChannelView::new(&phantom.volume, &cfg, 0).unwrap();
    let slices = mass_maskgen::sample_seed_slices(64, 1.5, cfg.d_mm);
    println!("seed slices: {slices:?}");

    for (si, s) in phantom.structures.iter().enumerate() {
        let bb = s.mask.bounding_box().unwrap();
        let hits: Vec<usize> = slices
            .iter()
            .copied()
            .filter(|&i| i >= bb[0] && i <= bb[1])
            .collect();
        println!(
            "structure {si}: {} intensity {} count {} bbox {:?} seed-hits {:?}",
            s.kind.as_str(),
            s.intensity,
            s.mask.voxel_count(),
            bb,
            hits
        );
        for &idx in &hits {
            let gt2d = s.mask.voxels.index_axis(Axis(0), idx).to_owned();
            let gt_area: usize = gt2d.iter().map(|&v| v as usize).sum();
            let img = view.slice3(idx);
            let mut rng = mass_core::rng::substream_indexed(0, "maskgen/propose", idx as u64);
            let props = propose_2d(&img, &cfg, 0, idx, &mut rng);
            let (best_iou, best_at) = props
                .iter()
                .enumerate()
                .map(|(pi, p)| {
                    let inter: usize = p
                        .mask2d
                        .iter()
                        .zip(gt2d.iter())
                        .map(|(&a, &b)| (a & b) as usize)
                        .sum();
                    let union = p.area + gt_area - inter;
                    (inter as f64 / union.max(1) as f64, pi)
                })
                .fold((0.0, usize::MAX), |acc, x| if x.0 > acc.0 { x } else { acc });
            println!("  slice {idx}: gt_area {gt_area}, {} props, best 2d IoU {best_iou:.3}", props.len());
            if best_at != usize::MAX && best_iou > 0.3 {
                let p = &props[best_at];
                let m =
                    mass_maskgen::propagate_3d(&phantom.volume, &view, p, &cfg).unwrap();
                let d = mass_core::dice_score(&m, &s.mask).unwrap();
                let prop_bb = m.bounding_box().unwrap();
                println!(
                    "    propagated from best seed: 3d dice {d:.3}, mask count {}, axis-0 span {}..{}",
                    m.voxel_count(), prop_bb[0], prop_bb[1]
                );
            }
        }
    }
}
