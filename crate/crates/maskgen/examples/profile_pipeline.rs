//! Stage timing probe for the phantom pipeline (dev tool).

use mass_maskgen::{generate_bank, ChannelView, MaskGenConfig};
use mass_phantom::{generate_phantom, ModalityStyle, PhantomSpec};
use std::time::Instant;

fn main() {
    let spec = PhantomSpec {
        seed: 0,
        shape: [64, 64, 64],
        n_structures: 4,
        modality_style: ModalityStyle::CtLike,
        noise_std: 0.02,
    };
    let t0 = Instant::now();
    let phantom = generate_phantom(&spec).unwrap();
    println!("phantom: {:?}", t0.elapsed());

    let cfg = MaskGenConfig::default();
    let t0 = Instant::now();
    let view = ChannelView::new(&phantom.volume, &cfg, 0).unwrap();
    println!("channelize: {:?}", t0.elapsed());

    let t0 = Instant::now();
    let slices = mass_maskgen::sample_seed_slices(64, 1.5, cfg.d_mm);
    let mut n_props = 0;
    for &idx in &slices {
        let img = view.slice3(idx);
        let mut rng = mass_core::rng::substream_indexed(0, "maskgen/propose", idx as u64);
        let props = mass_maskgen::propose_2d(&img, &cfg, 0, idx, &mut rng);
        n_props += props.len();
    }
    println!("propose ({} slices, {} proposals): {:?}", slices.len(), n_props, t0.elapsed());

    let t0 = Instant::now();
    let mut raw = Vec::new();
    for &idx in &slices {
        let img = view.slice3(idx);
        let mut rng = mass_core::rng::substream_indexed(0, "maskgen/propose", idx as u64);
        for p in mass_maskgen::propose_2d(&img, &cfg, 0, idx, &mut rng) {
            raw.push(mass_maskgen::propagate_3d(&phantom.volume, &view, &p, &cfg).unwrap());
        }
    }
    println!("propagate ({} raw masks): {:?}", raw.len(), t0.elapsed());

    let t0 = Instant::now();
    let bank = mass_maskgen::postprocess_bank(raw, &cfg, 0, &phantom.volume).unwrap();
    println!("postprocess -> {} masks: {:?}", bank.len(), t0.elapsed());

    let t0 = Instant::now();
    let full = generate_bank(&phantom.volume, &cfg, 0).unwrap();
    println!("full pipeline -> {} masks: {:?}", full.len(), t0.elapsed());

    let stats = mass_maskgen::mask_quality_stats(&full, &phantom.gt_masks()).unwrap();
    for (i, row) in stats.per_structure.iter().enumerate() {
        println!("gt {i}: best {:.1} avg {:.1} pct>40 {:.1}", row.best, row.avg, row.pct_gt40);
    }
}
