//! Every synthetic generator, with its task and feature dimension.

use lhessian::datasets::{generate, DatasetSpec, Generator};

fn main() -> lhessian::Result<()> {
    for g in Generator::ALL {
        let ds = generate(&DatasetSpec::new(g, 200, 3))?;
        println!("{:<18} {:?} n={} d={} classes={}", g.name(), ds.task, ds.len(), ds.dim(), ds.n_classes);
    }
    let blobs = generate(&DatasetSpec::new(Generator::Blobs, 300, 3).with_classes(4).with_features(3))?;
    let path = std::env::temp_dir().join("lhessian-blobs.csv");
    blobs.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
