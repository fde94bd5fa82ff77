//! The validator catching a hand-corrupted snapshot stream.

use lhessian::datasets::{generate, DatasetSpec, Generator};
use lhessian::snapshot::{validate_str, write_stream};
use lhessian::training::{train, TrainConfig, Variant};

fn main() -> lhessian::Result<()> {
    let ds = generate(&DatasetSpec::new(Generator::Circles, 120, 2))?;
    let mut config = TrainConfig::for_variant(Variant::No, ds.task, 2);
    config.iterations = 20;
    config.checkpoint_every = 10;
    let run = train(&config, &ds)?;
    let path = std::env::temp_dir().join("lhessian-validate-demo.jsonl");
    write_stream(&run.snapshots, &path)?;
    let text = std::fs::read_to_string(&path).expect("stream written above");
    println!("clean stream: {} violations", validate_str(&text).violations.len());

    // Claim a wrong rank and drop a required field.
    let corrupted = text
        .replacen("\"hessian_rank\":", "\"hessian_rank\":99,\"ignored\":", 1)
        .replacen("\"near_zero_fraction\":", "\"nzf\":", 1);
    for v in validate_str(&corrupted).violations {
        println!("{v}");
    }
    Ok(())
}
