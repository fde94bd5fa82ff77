//! Feature groups, correlation matrix and CCA for one training stream.

use lhessian::analysis::{canonical_products, cca, correlation_matrix, extract_features, score_stats};
use lhessian::datasets::{generate, DatasetSpec, Generator};
use lhessian::training::{train, Optimizer, TrainConfig, Variant};

fn main() -> lhessian::Result<()> {
    let ds = generate(&DatasetSpec::new(Generator::Blobs, 300, 9))?;
    let mut config = TrainConfig::for_variant(Variant::No, ds.task, 9);
    config.optimizer = Optimizer::ADAM.with_lr(0.01);
    config.iterations = 150;
    config.checkpoint_every = 10;
    let run = train(&config, &ds)?;

    let full = extract_features(&run.snapshots)?;
    println!("group A {:?}, group B {} columns, {} rows", full.a_names, full.b.cols(), full.rows());
    let corr = correlation_matrix(&full)?;
    let undefined = corr.values.iter().flatten().filter(|v| v.is_none()).count();
    println!("correlation matrix {}x{} with {undefined} undefined entries", corr.names.len(), corr.names.len());

    let (features, dropped) = full.drop_constant();
    println!("dropped constant columns: {dropped:?}");
    let k = 2.min(features.a.cols()).min(features.b.cols());
    let r = cca(&features.a, &features.b, k)?;
    println!("canonical correlations {:?}", r.correlations);
    let stats = score_stats(&canonical_products(&r))?;
    println!("{stats:?}");
    Ok(())
}
