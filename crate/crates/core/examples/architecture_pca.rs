//! Separating the no/sure/huge variants in Hessian-feature PCA space.

use lhessian::analysis::{pca_architectures, silhouette};
use lhessian::datasets::{generate, DatasetSpec, Generator};
use lhessian::snapshot::Snapshot;
use lhessian::training::{train_many, Optimizer, TrainConfig, Variant};

fn main() -> lhessian::Result<()> {
    let ds = generate(&DatasetSpec::new(Generator::Blobs, 240, 4))?;
    let configs: Vec<TrainConfig> = Variant::ALL
        .iter()
        .map(|&v| {
            let mut c = TrainConfig::for_variant(v, ds.task, 4);
            c.optimizer = Optimizer::ADAM.with_lr(0.01);
            c.iterations = 60;
            c.checkpoint_every = 15;
            c.hessian_store_cap = 0;
            c
        })
        .collect();
    let runs = train_many(&configs, &ds, 3)
        .into_iter()
        .collect::<lhessian::Result<Vec<_>>>()?;
    let streams: Vec<&[Snapshot]> = runs.iter().map(|r| r.snapshots.as_slice()).collect();

    let pca = pca_architectures(&streams)?;
    for p in &pca.points {
        println!("{:<5} iteration {:>3}  ({:>8.3}, {:>8.3})", p.variant, p.iteration, p.pc1, p.pc2);
    }
    println!("explained variance ratio {:?}", pca.explained_ratio);
    println!("silhouette by variant {:.3}", silhouette(&pca.coordinates(), &pca.labels())?);
    Ok(())
}
