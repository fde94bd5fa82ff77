use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{pearson_corr, standardize_columns, svd, sym_eigendecompose, DenseMatrix};

/// Relative ridge added to each covariance block: `eps = 1e-8 * trace / dim`.
pub const CCA_RIDGE: f64 = 1e-8;
pub const DEFAULT_CCA_K: usize = 2;

/// Canonical correlation analysis of two column-standardized groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcaResult {
    /// `a x k`, applied to standardized columns; dropped constant columns get zero rows.
    pub x_weights: DenseMatrix,
    /// `b x k`
    pub y_weights: DenseMatrix,
    /// Descending, in `[0, 1]`.
    pub correlations: Vec<f64>,
    /// `samples x k`, unit population variance per column.
    pub scores_x: DenseMatrix,
    pub scores_y: DenseMatrix,
    pub x_dropped: Vec<usize>,
    pub y_dropped: Vec<usize>,
}

/// `(C + eps I)^(-1/2)` for a covariance block.
fn inverse_sqrt(c: &DenseMatrix, label: &str) -> Result<DenseMatrix> {
    let dim = c.rows();
    let eps = CCA_RIDGE * c.trace() / dim as f64;
    let mut r = c.clone();
    for i in 0..dim {
        r[(i, i)] += eps;
    }
    let e = sym_eigendecompose(&r)?;
    let (lo, hi) = (e.eigenvalues[0], e.eigenvalues[dim - 1]);
    if !(lo > 0.0) {
        return Err(Error::Degenerate(format!(
            "{label} covariance is singular after the ridge (eigenvalues {lo:e} .. {hi:e})"
        )));
    }
    let mut out = DenseMatrix::zeros(dim, dim);
    for (k, lambda) in e.eigenvalues.iter().enumerate() {
        let s = 1.0 / lambda.sqrt();
        for i in 0..dim {
            let vi = e.eigenvectors[(i, k)] * s;
            for j in 0..dim {
                out[(i, j)] += vi * e.eigenvectors[(j, k)];
            }
        }
    }
    Ok(out)
}

fn covariance(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(x.transpose().matmul(y)?.scale(1.0 / x.rows() as f64))
}

fn expand(w: &DenseMatrix, retained: &[usize], total: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(total, w.cols());
    for (i, &r) in retained.iter().enumerate() {
        out.row_mut(r).copy_from_slice(w.row(i));
    }
    out
}

/// First `k` canonical pairs of `a` and `b` via SVD of the whitened cross-covariance.
///
/// Columns are standardized first and constant columns dropped. Canonical
/// variates are rescaled to unit variance, and the reported correlations are
/// the sample correlations of the resulting score pairs.
pub fn cca(a: &DenseMatrix, b: &DenseMatrix, k: usize) -> Result<CcaResult> {
    let n = a.rows();
    if b.rows() != n {
        return Err(crate::error::dim_err!("A has {n} rows, B has {}", b.rows()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("CCA needs at least 3 rows, got {n}")));
    }
    let (sa, sb) = (standardize_columns(a), standardize_columns(b));
    let max_k = sa.retained.len().min(sb.retained.len());
    if k == 0 || k > max_k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={max_k} (non-constant columns: {} and {})",
            sa.retained.len(),
            sb.retained.len()
        )));
    }
    let (zx, zy) = (&sa.matrix, &sb.matrix);
    let wx = inverse_sqrt(&covariance(zx, zx)?, "A")?;
    let wy = inverse_sqrt(&covariance(zy, zy)?, "B")?;
    let t = wx.matmul(&covariance(zx, zy)?)?.matmul(&wy)?;
    let dec = svd(&t)?;

    let mut pairs = Vec::with_capacity(k);
    for c in 0..k {
        let mut xw: Vec<f64> = wx.matvec(&dec.u.column(c))?;
        let mut yw: Vec<f64> = wy.matvec(&dec.v.column(c))?;
        let mut sx = zx.matvec(&xw)?;
        let mut sy = zy.matvec(&yw)?;
        for (w, s) in [(&mut xw, &mut sx), (&mut yw, &mut sy)] {
            let m = s.iter().sum::<f64>() / n as f64;
            let sd = (s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
            if sd > 0.0 {
                w.iter_mut().for_each(|v| *v /= sd);
                s.iter_mut().for_each(|v| *v /= sd);
            }
        }
        let mut r = pearson_corr(&sx, &sy).unwrap_or(0.0);
        if r < 0.0 {
            yw.iter_mut().for_each(|v| *v = -*v);
            sy.iter_mut().for_each(|v| *v = -*v);
            r = -r;
        }
        pairs.push((r.min(1.0), xw, yw, sx, sy));
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0));

    let cols = |f: &dyn Fn(&(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)) -> Vec<f64>| {
        DenseMatrix::from_columns(&pairs.iter().map(f).collect::<Vec<_>>())
    };
    let x_weights = expand(&cols(&|p| p.1.clone())?, &sa.retained, a.cols());
    let y_weights = expand(&cols(&|p| p.2.clone())?, &sb.retained, b.cols());
    Ok(CcaResult {
        x_weights,
        y_weights,
        correlations: pairs.iter().map(|p| p.0).collect(),
        scores_x: cols(&|p| p.3.clone())?,
        scores_y: cols(&|p| p.4.clone())?,
        x_dropped: sa.dropped,
        y_dropped: sb.dropped,
    })
}

/// The five row statistics of a score-statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreStats {
    pub max: f64,
    pub avg: f64,
    /// Lower middle element for even counts.
    pub median: f64,
    pub min: f64,
    /// Population convention.
    pub std: f64,
}

pub fn score_stats(values: &[f64]) -> Result<ScoreStats> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("score statistics of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let avg = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / n).sqrt();
    Ok(ScoreStats {
        max: v[v.len() - 1],
        avg,
        median: v[(v.len() - 1) / 2],
        min: v[0],
        std,
    })
}

/// Per-sample contributions to the first canonical correlation: `scores_x[i, 0] * scores_y[i, 0]`.
///
/// Their mean is the first canonical correlation.
pub fn canonical_products(r: &CcaResult) -> Vec<f64> {
    (0..r.scores_x.rows())
        .map(|i| r.scores_x[(i, 0)] * r.scores_y[(i, 0)])
        .collect()
}

/// Table with rows max/avg/median/min/std and one column per label.
pub fn score_stats_csv(columns: &[(String, ScoreStats)]) -> String {
    let mut out = String::from("statistic");
    for (label, _) in columns {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let rows: [(&str, fn(&ScoreStats) -> f64); 5] = [
        ("max", |s| s.max),
        ("avg", |s| s.avg),
        ("median", |s| s.median),
        ("min", |s| s.min),
        ("std", |s| s.std),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for (_, s) in columns {
            out.push(',');
            out.push_str(&get(s).to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn random(rng: &mut Rng64, n: usize, d: usize) -> DenseMatrix {
        DenseMatrix::new(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn self_correlation() {
        let mut rng = Rng64::new(1);
        let a = random(&mut rng, 50, 3);
        let r = cca(&a, &a, 2).unwrap();
        assert!(r.correlations.iter().all(|&c| c >= 1.0 - 1e-8), "{:?}", r.correlations);
    }

    #[test]
    fn linear_relation() {
        let mut rng = Rng64::new(2);
        let a = random(&mut rng, 200, 3);
        let rot = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![-0.6, 0.0, 0.8],
            vec![0.8, 0.0, 0.6],
        ])
        .unwrap();
        let noise = random(&mut rng, 200, 3).scale(0.01);
        let mut b = a.matmul(&rot).unwrap();
        for (x, e) in b.data_mut().iter_mut().zip(noise.data()) {
            *x += e;
        }
        let r = cca(&a, &b, 2).unwrap();
        assert!(r.correlations[0] >= 0.99);
    }

    #[test]
    fn null_case() {
        let mut rng = Rng64::new(3);
        let (a, b) = (random(&mut rng, 500, 3), random(&mut rng, 500, 3));
        let r = cca(&a, &b, 2).unwrap();
        assert!(r.correlations[0] < 0.2, "{:?}", r.correlations);
        assert!(r.correlations[0] >= r.correlations[1]);
    }

    #[test]
    fn k_checks() {
        let mut rng = Rng64::new(4);
        let a = random(&mut rng, 10, 2);
        assert!(cca(&a, &a, 3).is_err());
        assert!(cca(&a, &a, 0).is_err());
        assert!(cca(&random(&mut rng, 2, 2), &random(&mut rng, 2, 2), 1).is_err());
    }

    #[test]
    fn stats_conventions() {
        let s = score_stats(&[1.0]).unwrap();
        assert_eq!((s.max, s.avg, s.median, s.min, s.std), (1.0, 1.0, 1.0, 1.0, 0.0));
        let s = score_stats(&[1.0, 0.0]).unwrap();
        assert_eq!((s.max, s.avg, s.median, s.min, s.std), (1.0, 0.5, 0.0, 0.0, 0.5));
        assert!(score_stats(&[]).is_err());
    }

    #[test]
    fn table_shape() {
        let s = score_stats(&[0.2, 0.4]).unwrap();
        let cols: Vec<(String, ScoreStats)> =
            ["no", "sure", "huge"].iter().map(|v| (v.to_string(), s)).collect();
        let csv = score_stats_csv(&cols);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "statistic,no,sure,huge");
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    }
}
