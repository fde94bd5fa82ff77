//! Train one variant, write its snapshot stream, read it back and validate it.

use lhessian::datasets::{generate, DatasetSpec, Generator};
use lhessian::snapshot::{read_stream, validate, write_stream};
use lhessian::training::{train, Optimizer, TrainConfig, Variant};

fn main() -> lhessian::Result<()> {
    let ds = generate(&DatasetSpec::new(Generator::Moons, 300, 5))?;
    let mut config = TrainConfig::for_variant(Variant::Sure, ds.task, 5);
    config.optimizer = Optimizer::ADAM.with_lr(0.01);
    config.iterations = 100;
    config.checkpoint_every = 25;
    let run = train(&config, &ds)?;

    for s in &run.snapshots {
        let last = s.layers.last().expect("layers");
        println!(
            "iteration {:>3}  loss {:.4}  accuracy {:.3}  layer-0 rank {}  output near-zero {:.3}",
            s.iteration,
            s.scores.train_loss,
            s.scores.accuracy.unwrap_or(f64::NAN),
            s.layers[0].hessian_rank,
            last.near_zero_fraction
        );
    }

    let path = std::env::temp_dir().join(format!("{}.snapshots.jsonl", run.run_id));
    write_stream(&run.snapshots, &path)?;
    let back = read_stream(&path)?;
    assert_eq!(back, run.snapshots);
    let report = validate(&path)?;
    println!("{}: {} snapshots, {} violations", path.display(), report.snapshots, report.violations.len());
    Ok(())
}
