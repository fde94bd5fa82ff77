//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`; sweeps over all
//! pairs repeat until the off-diagonal Frobenius norm falls below
//! `1e-12 * ||M||_F` or 100 sweeps have run. Pairs whose magnitude is already
//! below `1e-12 * ||M||_F / n` are skipped, which keeps block-diagonal and
//! low-rank inputs (the common case for local Hessians) cheap.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues in ascending order with matching unit eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (k, &lambda) in self.eigenvalues.iter().enumerate() {
                    acc += self.eigenvectors[(i, k)] * lambda * self.eigenvectors[(j, k)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

fn check_symmetric(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigendecomposition input".into()));
    }
    let asymmetry = m.max_asymmetry();
    let tolerance = SYMMETRY_TOL * m.max_abs().max(1.0);
    if asymmetry > tolerance {
        return Err(Error::Asymmetric {
            asymmetry,
            tolerance,
        });
    }
    Ok(m.symmetrized())
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += a[(i, j)] * a[(i, j)];
        }
    }
    (2.0 * acc).sqrt()
}

/// Runs the Jacobi iteration in place on `a`, optionally accumulating rotations into `v`.
fn jacobi(a: &mut DenseMatrix, mut v: Option<&mut DenseMatrix>) {
    let n = a.rows();
    let norm = a.frobenius();
    if n < 2 || norm == 0.0 {
        return;
    }
    let tol = OFF_DIAGONAL_TOL * norm;
    let skip = tol / n as f64;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    if arp == 0.0 && arq == 0.0 {
                        continue;
                    }
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                if let Some(v) = v.as_deref_mut() {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = c * vrp - s * vrq;
                        v[(r, q)] = s * vrp + c * vrq;
                    }
                }
            }
        }
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(M + M^T) / 2` after checking that its
/// asymmetry is within `1e-8 * max(1, ||M||_max)`.
pub fn sym_eigendecompose(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let mut a = check_symmetric(m)?;
    let n = a.rows();
    let mut v = DenseMatrix::identity(n);
    jacobi(&mut a, Some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));

    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Deterministic sign: largest-magnitude entry positive.
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for x in &mut col {
            *x *= sign / norm;
        }
        for (r, x) in col.into_iter().enumerate() {
            eigenvectors[(r, k)] = x;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (ascending); skips eigenvector accumulation.
pub fn sym_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    let mut a = check_symmetric(m)?;
    jacobi(&mut a, None);
    let mut values: Vec<f64> = (0..a.rows()).map(|i| a[(i, i)]).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_2x2() {
        let e = sym_eigendecompose(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_case() {
        let e = sym_eigendecompose(&mat(&[vec![3.0, 0.0], vec![0.0, 2.0]])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 3.0]);
        assert_eq!(e.eigenvectors.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let e = sym_eigendecompose(&mat(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let m = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            sym_eigendecompose(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            sym_eigendecompose(&mat(&[vec![0.0, 1.0], vec![0.5, 0.0]])),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let m = mat(&[vec![1.0, 2.0 + 1e-10], vec![2.0, 1.0]]);
        let e = sym_eigendecompose(&m).unwrap();
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_block_diagonal() {
        // Two rank-1 blocks: eigenvalues c * |v|^2 and zeros.
        let v1 = [1.0, 2.0, 3.0];
        let v2 = [0.5, -1.0];
        let mut m = DenseMatrix::zeros(5, 5);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = -0.3 * v1[i] * v1[j];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                m[(3 + i, 3 + j)] = 2.0 * v2[i] * v2[j];
            }
        }
        let vals = sym_eigenvalues(&m).unwrap();
        assert!((vals[0] + 0.3 * 14.0).abs() < 1e-12);
        assert!((vals[4] - 2.0 * 1.25).abs() < 1e-12);
        for v in &vals[1..4] {
            assert!(v.abs() < 1e-12);
        }
    }
}
