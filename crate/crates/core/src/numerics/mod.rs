//! Dense linear algebra and signal-processing kernels.
//!
//! Everything here runs in `f64` with a fixed summation order, so results are
//! bit-identical regardless of how many threads call into them.

mod eigen;
mod fft;
mod matrix;
mod pca;
mod stats;
mod svd;

pub use eigen::{sym_eigendecompose, sym_eigenvalues, EigenDecomposition};
pub(crate) use fft::PowerFft;
pub use fft::{parseval_energy, real_fft_power};
pub use matrix::DenseMatrix;
pub use pca::{pca_project, standardize_columns, PcaResult, Standardized};
pub use stats::{mean, pearson_corr, population_std};
pub use svd::{svd, Svd};
