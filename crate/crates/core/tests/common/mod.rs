#![allow(dead_code)]

use lhessian::network::{ActivationKind, Network};
use lhessian::rng::Rng64;
use lhessian::snapshot::{capture, layer_hessians, Snapshot, SnapshotMeta};
use lhessian::training::{MetricReport, Variant};

/// Snapshot of a random Tanh network with random gradients and metrics.
pub fn synthetic_snapshot(seed: u64, iteration: usize, widths: &[usize], variant: Variant, run_id: &str) -> Snapshot {
    let mut rng = Rng64::new(seed);
    let acts = vec![ActivationKind::Tanh; widths.len() - 1];
    let net = Network::init(widths, &acts, 0.5 + rng.next_f64(), &mut rng).unwrap();
    let grads: Vec<Vec<f64>> = net
        .blocks()
        .iter()
        .map(|b| (0..b.param_count()).map(|_| 0.1 * rng.normal()).collect())
        .collect();
    let probe: Vec<f64> = (0..widths[0]).map(|_| rng.normal()).collect();
    let h = layer_hessians(&net, &probe, 2048).unwrap();
    let acc = rng.next_f64();
    let scores = MetricReport {
        accuracy: Some(acc),
        precision: Some(rng.next_f64()),
        recall: Some(rng.next_f64()),
        f1: Some(rng.next_f64()),
        auc: Some(rng.next_f64()),
        train_loss: 1.0 - acc,
        ..Default::default()
    };
    let meta = SnapshotMeta {
        run_id: run_id.into(),
        variant,
        dataset: "synthetic".into(),
        iteration,
    };
    capture(&net, &grads, &h, scores, meta, 2048).unwrap()
}

/// A stream of `n` synthetic snapshots for one variant.
pub fn synthetic_stream(seed: u64, n: usize, widths: &[usize], variant: Variant) -> Vec<Snapshot> {
    let run_id = format!("synthetic-{variant}-s{seed}");
    (0..n)
        .map(|i| synthetic_snapshot(seed * 1000 + i as u64, i * 10, widths, variant, &run_id))
        .collect()
}
