use log::warn;

use crate::error::{Error, Result};
use crate::numerics::{sym_eigendecompose, DenseMatrix};

/// Column-standardized copy of a matrix.
#[derive(Debug, Clone)]
pub struct Standardized {
    /// Retained columns only, zero mean and unit population std.
    pub matrix: DenseMatrix,
    pub retained: Vec<usize>,
    pub dropped: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Standardizes every column; constant columns (std 0) are dropped.
pub fn standardize_columns(x: &DenseMatrix) -> Standardized {
    let (n, d) = (x.rows(), x.cols());
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let col = x.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        means[j] = m;
        stds[j] = var.sqrt();
    }
    let (retained, dropped): (Vec<usize>, Vec<usize>) = (0..d).partition(|&j| {
        // Relative test keeps round-off noise around a constant from counting as signal.
        stds[j] > 1e-12 * means[j].abs().max(f64::MIN_POSITIVE) && stds[j] > 0.0
    });
    let mut matrix = DenseMatrix::zeros(n, retained.len());
    for i in 0..n {
        for (k, &j) in retained.iter().enumerate() {
            matrix[(i, k)] = (x[(i, j)] - means[j]) / stds[j];
        }
    }
    Standardized {
        matrix,
        retained,
        dropped,
        means,
        stds,
    }
}

/// Principal component projection of column-standardized data.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// `k x features`; dropped (constant) columns carry zero loadings.
    pub components: DenseMatrix,
    /// `samples x k`
    pub projected: DenseMatrix,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Total variance of the standardized data (the retained column count).
    pub total_variance: f64,
    pub dropped_columns: Vec<usize>,
}

impl PcaResult {
    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }
}

/// Projects samples onto the top-`k` principal axes.
///
/// Columns are standardized internally (population convention); constant
/// columns are dropped with a warning.
pub fn pca_project(x: &DenseMatrix, k: usize) -> Result<PcaResult> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            n.min(d)
        )));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input".into()));
    }
    let std = standardize_columns(x);
    if !std.dropped.is_empty() {
        warn!("PCA: dropping constant columns {:?}", std.dropped);
    }
    let r = std.retained.len();
    if r < k {
        return Err(Error::Degenerate(format!(
            "only {r} non-constant columns remain for k = {k}"
        )));
    }
    let z = &std.matrix;
    let cov = z.transpose().matmul(z)?.scale(1.0 / n as f64);
    let eig = sym_eigendecompose(&cov)?;

    let mut components = DenseMatrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    let mut axes = DenseMatrix::zeros(r, k);
    for c in 0..k {
        let src = r - 1 - c;
        explained_variance.push(eig.eigenvalues[src].max(0.0));
        for (i, &col) in std.retained.iter().enumerate() {
            let v = eig.eigenvectors[(i, src)];
            components[(c, col)] = v;
            axes[(i, c)] = v;
        }
    }
    let projected = z.matmul(&axes)?;
    Ok(PcaResult {
        components,
        projected,
        explained_variance,
        total_variance: r as f64,
        dropped_columns: std.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_has_single_component() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let p = pca_project(&x, 1).unwrap();
        assert!((p.explained_ratio()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 3.0, (i * i) as f64]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let p = pca_project(&x, 2).unwrap();
        assert_eq!(p.dropped_columns, vec![1]);
        assert_eq!(p.components[(0, 1)], 0.0);
        assert!(pca_project(&x, 3).is_err());
    }

    #[test]
    fn argument_errors() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(pca_project(&x, 1).is_err());
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(pca_project(&x, 3).is_err());
        assert!(pca_project(&x, 0).is_err());
    }
}
