use std::time::Instant;

use pml::agent::{bc_train, BcNet, BcNetSpec, BcTrainConfig};
use pml::data::{augment_flip, collect_expert_frames, normalize_bins, BinSpec, CapMode};
use pml::model::image_to_tensor;
use pml::rng::rng_from_seed;
use pml::sim::track_by_name;
use pml::RunConfig;

fn main() {
    let cfg = RunConfig::default();
    let mut frames = Vec::new();
    for (t, n) in [
        ("straight-wide", 4000usize),
        ("one-turn-wide", 7000),
        ("straight-narrow", 4000),
        ("one-turn-narrow", 7000),
    ] {
        let track = track_by_name(t).unwrap();
        let (f, eps) = collect_expert_frames(&track, &cfg, n, 21).unwrap();
        println!("{t}: {} frames ({eps} episodes)", f.len());
        frames.extend(f);
    }
    let frames = augment_flip(&frames);
    println!("after flip: {}", frames.len());
    let mut hist = [0usize; 21];
    for f in &frames {
        let v = f.action.value();
        let b = ((v + 1.0) / 2.0 * 21.0).min(20.0) as usize;
        hist[b] += 1;
    }
    println!("bins before: {hist:?}");
    let spec21 = BinSpec {
        bin_count: 21,
        cap_mode: CapMode::FixedCap(300),
    };
    let (kept, rep) = normalize_bins(&frames, &spec21, 5).unwrap();
    println!(
        "normalized: {} frames (cap {}), after {:?}",
        kept.len(),
        rep.cap,
        rep.after
    );

    // Throughput probe on the default net before committing to training.
    let net_spec = BcNetSpec::default();
    let mut net = BcNet::<f32>::new(net_spec.clone(), 1).unwrap();
    let mut rng = rng_from_seed(2);
    let probe: Vec<_> = kept.iter().take(64).cloned().collect();
    let obs: Vec<_> = probe.iter().map(|f| image_to_tensor::<f32>(&f.obs)).collect();
    let t0 = Instant::now();
    let (_, cache) = net.forward_train(&obs, &mut rng).unwrap();
    let fwd = t0.elapsed();
    let gout = vec![1.0f32; obs.len()];
    let t1 = Instant::now();
    net.backward(&cache, &gout).unwrap();
    let bwd = t1.elapsed();
    println!(
        "batch of {}: forward {:.1?}, backward {:.1?} -> {:.1} samples/s round trip",
        obs.len(),
        fwd,
        bwd,
        obs.len() as f64 / (fwd + bwd).as_secs_f64()
    );

    let t2 = Instant::now();
    let (store, report) = bc_train(
        &kept,
        &net_spec,
        &BcTrainConfig {
            epochs: 6,
            ..BcTrainConfig::default()
        },
    )
    .unwrap();
    println!("trained in {:.1?}", t2.elapsed());
    store.save("/tmp/pilot/bc.pmlw").unwrap();
    print!("{}", report.to_tsv());
}
