//! Local Hessian of one Tanh block by three independent routes.
//!
//! Run with `cargo run --example local_hessian`.

use lhessian::local_hessian::{hessian_closed_form, hessian_fd, hessian_rowwise, DEFAULT_FD_STEP};
use lhessian::network::{ActivationKind, FunctionalBlock};
use lhessian::numerics::DenseMatrix;
use lhessian::spectral::hessian_spectrum;

fn main() -> lhessian::Result<()> {
    let weights = DenseMatrix::from_rows(&[vec![0.5, -1.0, 0.25], vec![1.5, 0.3, -0.7]])?;
    let block = FunctionalBlock::new(weights, vec![0.1, -0.2], ActivationKind::Tanh, 0)?;
    let z = [0.8, -0.4, 1.2];

    let rowwise = hessian_rowwise(&block, &z)?;
    let closed = hessian_closed_form(&block, &z)?;
    let fd = hessian_fd(&block, &z, DEFAULT_FD_STEP)?;
    println!("parameters: {}", rowwise.dim());
    println!("row-wise vs closed form: {:.3e}", rowwise.matrix.max_abs_diff(&closed.matrix));
    println!("row-wise vs finite differences: {:.3e}", rowwise.matrix.max_abs_diff(&fd.matrix));

    let s = hessian_spectrum(&rowwise)?;
    println!("eigenvalues: {:?}", s.eigenvalues);
    println!(
        "trace {:.6}  rank {}  near-zero fraction {:.3}  symmetry {:.3}",
        s.trace, s.rank, s.near_zero_fraction, s.symmetry_score
    );

    let linear = FunctionalBlock::new(block.weights.clone(), block.bias.clone(), ActivationKind::Identity, 0)?;
    let zero = hessian_rowwise(&linear, &z)?;
    println!("identity block Hessian max |h|: {}", zero.matrix.max_abs());
    Ok(())
}
