//! Diagnostics for a trained network and for a deliberately saturated one.

use lhessian::analysis::{adjacent_layer_similarity, diagnose, network_weights, DiagnosticThresholds};
use lhessian::datasets::{generate, DatasetSpec, Generator};
use lhessian::network::ActivationKind;
use lhessian::training::{train, Optimizer, TrainConfig, Variant};

fn main() -> lhessian::Result<()> {
    let ds = generate(&DatasetSpec::new(Generator::Moons, 400, 3))?;
    let thresholds = DiagnosticThresholds::default();

    let mut healthy = TrainConfig::for_variant(Variant::Sure, ds.task, 3);
    healthy.optimizer = Optimizer::ADAM.with_lr(0.01);
    healthy.iterations = 100;
    let run = train(&healthy, &ds)?;
    print!("{}", diagnose(&run.snapshots, &thresholds)?.to_text());
    println!("adjacent similarity {:?}\n", adjacent_layer_similarity(&network_weights(&run.network))?);

    let mut saturated = TrainConfig {
        hidden: vec![8],
        init_scale_multiplier: 10.0,
        ..healthy
    }
    .with_activation(ActivationKind::Tanh);
    saturated.variant = Variant::No;
    let run = train(&saturated, &ds)?;
    print!("{}", diagnose(&run.snapshots, &thresholds)?.to_text());
    Ok(())
}
