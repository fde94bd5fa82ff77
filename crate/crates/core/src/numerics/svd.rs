use crate::error::{Error, Result};
use crate::numerics::{sym_eigendecompose, DenseMatrix};

/// Thin singular value decomposition `M = U diag(s) V^T` with `k = min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// `rows x k`
    pub u: DenseMatrix,
    /// Non-negative, descending.
    pub singular_values: Vec<f64>,
    /// `cols x k`
    pub v: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n, k) = (self.u.rows(), self.v.rows(), self.singular_values.len());
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..k {
                    acc += self.u[(i, l)] * self.singular_values[l] * self.v[(j, l)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Completes `basis` (orthonormal vectors of length `dim`) with Gram-Schmidt over unit vectors.
fn complete_basis(basis: &mut Vec<Vec<f64>>, dim: usize, target: usize) {
    let mut e = 0;
    while basis.len() < target && e < dim {
        let mut cand = vec![0.0; dim];
        cand[e] = 1.0;
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = dot(&cand, b);
                for (c, x) in cand.iter_mut().zip(b) {
                    *c -= proj * x;
                }
            }
        }
        let nrm = norm(&cand);
        if nrm > 1e-6 {
            cand.iter_mut().for_each(|c| *c /= nrm);
            basis.push(cand);
        }
        e += 1;
    }
}

/// SVD via the symmetric eigendecomposition of the smaller Gram matrix.
///
/// Each right singular vector is sign-fixed so its largest-magnitude entry is
/// positive, and the matching left vector follows.
pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    if m.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input".into()));
    }
    if m.rows() < m.cols() {
        // Decompose the transpose and swap roles, then re-fix signs on V.
        let t = svd(&m.transpose())?;
        let k = t.singular_values.len();
        let mut u = t.v;
        let mut v = t.u;
        for l in 0..k {
            let col = v.column(l);
            if pivot_sign(&col) < 0.0 {
                for i in 0..v.rows() {
                    v[(i, l)] = -v[(i, l)];
                }
                for i in 0..u.rows() {
                    u[(i, l)] = -u[(i, l)];
                }
            }
        }
        return Ok(Svd {
            u,
            singular_values: t.singular_values,
            v,
        });
    }

    let (rows, cols) = (m.rows(), m.cols());
    let gram = m.transpose().matmul(m)?;
    let eig = sym_eigendecompose(&gram)?;

    // Singular values from |M v| keep M V = U S exact even for tiny values.
    let mut pairs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..cols)
        .map(|j| {
            let mut vj = eig.eigenvectors.column(j);
            if pivot_sign(&vj) < 0.0 {
                vj.iter_mut().for_each(|x| *x = -*x);
            }
            let mv = m.matvec(&vj).expect("shape checked");
            (norm(&mv), vj, mv)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let s_max = pairs.first().map_or(0.0, |p| p.0);
    let tiny = 1e-14 * s_max.max(f64::MIN_POSITIVE);
    let mut singular_values = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut pending = Vec::new();
    for (l, (s, vj, mv)) in pairs.into_iter().enumerate() {
        if s > tiny {
            u_cols.push(mv.iter().map(|x| x / s).collect());
        } else {
            pending.push(l);
            u_cols.push(Vec::new());
        }
        singular_values.push(s);
        v_cols.push(vj);
    }
    if !pending.is_empty() {
        let mut basis: Vec<Vec<f64>> = u_cols.iter().filter(|c| !c.is_empty()).cloned().collect();
        let have = basis.len();
        complete_basis(&mut basis, rows, have + pending.len());
        for (slot, col) in pending.into_iter().zip(basis.into_iter().skip(have)) {
            u_cols[slot] = col;
        }
    }

    Ok(Svd {
        u: DenseMatrix::from_columns(&u_cols)?,
        singular_values,
        v: DenseMatrix::from_columns(&v_cols)?,
    })
}

fn pivot_sign(v: &[f64]) -> f64 {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        -1.0
    } else {
        1.0
    }
}
