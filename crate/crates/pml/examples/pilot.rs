use std::path::Path;

use pml::data::load_transitions;
use pml::model::{train_forward_model, LossKind, NetSpec, TrainConfig};

fn main() {
    let mut all = Vec::new();
    for t in [
        "straight-wide",
        "one-turn-wide",
        "two-turns-wide",
        "straight-narrow",
        "one-turn-narrow",
        "two-turns-narrow",
    ] {
        let path = format!("/tmp/pilot/zz-{t}.pmld");
        all.extend(load_transitions(Path::new(&path)).unwrap());
    }
    println!("{} transitions", all.len());
    let spec = NetSpec::default();
    let cfg = TrainConfig {
        epochs: 14,
        batch_size: 64,
        loss: LossKind::Bce,
        ..TrainConfig::default()
    };
    let t0 = std::time::Instant::now();
    let (store, report) = train_forward_model(&all, &spec, &cfg).unwrap();
    println!("trained in {:.1?}", t0.elapsed());
    store.save("/tmp/pilot/world.pmlw").unwrap();
    print!("{}", report.to_tsv());
}
