//! Eigendecomposition, SVD, FFT and PCA building blocks.

use lhessian::numerics::{pca_project, real_fft_power, parseval_energy, svd, sym_eigendecompose, DenseMatrix};

fn main() -> lhessian::Result<()> {
    let m = DenseMatrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]])?;
    let e = sym_eigendecompose(&m)?;
    println!("eigenvalues {:?}", e.eigenvalues);
    println!("reconstruction error {:.2e}", e.reconstruct().max_abs_diff(&m));

    let r = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]])?;
    let s = svd(&r)?;
    println!("singular values {:?}", s.singular_values);

    let signal: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).sin()).collect();
    let power = real_fft_power(&signal)?;
    let energy: f64 = signal.iter().map(|v| v * v).sum();
    println!("time energy {energy:.6}  spectral energy {:.6}", parseval_energy(&power, signal.len()));

    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i as f64).sqrt(), 1.0]).collect();
    let p = pca_project(&DenseMatrix::from_rows(&rows)?, 2)?;
    println!("explained ratio {:?}  dropped columns {:?}", p.explained_ratio(), p.dropped_columns);
    Ok(())
}
