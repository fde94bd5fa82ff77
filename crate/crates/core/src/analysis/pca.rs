use log::warn;
use serde::Serialize;

use super::features::log10_condition;
use crate::error::{Error, Result};
use crate::numerics::{pca_project, standardize_columns, DenseMatrix};
use crate::snapshot::{LayerRecord, Snapshot};
use crate::spectral::NEAR_ZERO_REL;
use crate::training::Variant;

/// Network-level Hessian features used to compare architectures of different depth.
pub const ARCHITECTURE_FEATURES: [&str; 20] = [
    "first.eigens_mean",
    "first.eigens_std",
    "first.eigens_min",
    "first.eigens_max",
    "first.rank",
    "first.log10_condition",
    "first.near_zero_fraction",
    "last.eigens_mean",
    "last.eigens_std",
    "last.eigens_min",
    "last.eigens_max",
    "last.rank",
    "last.log10_condition",
    "last.near_zero_fraction",
    "all.eigens_mean",
    "all.eigens_std",
    "all.eigens_min",
    "all.eigens_max",
    "all.near_zero_fraction",
    "all.log10_rank",
];

fn layer_block(l: &LayerRecord) -> [f64; 7] {
    let e = &l.hessian_eigens_spectral;
    [
        e.mean,
        e.std,
        e.min,
        e.max,
        l.hessian_rank as f64,
        log10_condition(l.hessian_condition),
        l.near_zero_fraction,
    ]
}

/// The [`ARCHITECTURE_FEATURES`] of one snapshot.
pub fn architecture_features(s: &Snapshot) -> Vec<f64> {
    let mut f = Vec::with_capacity(ARCHITECTURE_FEATURES.len());
    f.extend(layer_block(&s.layers[0]));
    f.extend(layer_block(&s.layers[s.layers.len() - 1]));
    let all: Vec<f64> = s.layers.iter().flat_map(|l| l.hessian_eigens.iter().copied()).collect();
    let n = all.len().max(1) as f64;
    let mean = all.iter().sum::<f64>() / n;
    let std = (all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let max_abs = all.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = NEAR_ZERO_REL * max_abs.max(1.0);
    let near = all.iter().filter(|v| v.abs() <= cutoff).count() as f64 / n;
    let rank: usize = s.layers.iter().map(|l| l.hessian_rank).sum();
    f.extend([
        mean,
        std,
        all.iter().copied().fold(f64::INFINITY, f64::min),
        all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        near,
        ((rank + 1) as f64).log10(),
    ]);
    f
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaPoint {
    pub variant: Variant,
    pub run_id: String,
    pub iteration: usize,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchitecturePca {
    /// One point per input snapshot, in input order.
    pub points: Vec<PcaPoint>,
    pub explained_ratio: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl ArchitecturePca {
    pub fn coordinates(&self) -> DenseMatrix {
        let data = self.points.iter().flat_map(|p| [p.pc1, p.pc2]).collect();
        DenseMatrix::new(self.points.len(), 2, data).expect("finite coordinates")
    }

    /// Stream index of each point.
    pub fn labels(&self) -> Vec<usize> {
        let mut seen: Vec<&str> = Vec::new();
        self.points
            .iter()
            .map(|p| match seen.iter().position(|r| *r == p.run_id) {
                Some(i) => i,
                None => {
                    seen.push(&p.run_id);
                    seen.len() - 1
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,run_id,iteration,pc1,pc2\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{}\n", p.variant, p.run_id, p.iteration, p.pc1, p.pc2));
        }
        out
    }
}

/// Two-component PCA of pooled, standardized architecture features.
///
/// When fewer than two feature columns vary, the missing components are zero.
pub fn pca_architectures(streams: &[&[Snapshot]]) -> Result<ArchitecturePca> {
    for s in streams {
        if s.len() < 2 {
            return Err(Error::InvalidArgument(
                "each stream needs at least 2 snapshots for PCA".into(),
            ));
        }
    }
    let snaps: Vec<&Snapshot> = streams.iter().flat_map(|s| s.iter()).collect();
    if snaps.len() < 2 {
        return Err(Error::Degenerate("PCA needs at least 2 snapshots in total".into()));
    }
    let rows: Vec<Vec<f64>> = snaps.iter().map(|s| architecture_features(s)).collect();
    let x = DenseMatrix::from_rows(&rows)?;
    let varying = standardize_columns(&x).retained.len();
    let k = varying.min(2).min(x.rows());
    let (coords, explained_ratio) = if k == 0 {
        warn!("PCA: every architecture feature is constant; all points coincide");
        (vec![[0.0, 0.0]; snaps.len()], vec![0.0, 0.0])
    } else {
        let p = pca_project(&x, k)?;
        let mut ratio = p.explained_ratio();
        ratio.resize(2, 0.0);
        let coords = (0..snaps.len())
            .map(|i| [p.projected[(i, 0)], if k > 1 { p.projected[(i, 1)] } else { 0.0 }])
            .collect();
        (coords, ratio)
    };
    let points = snaps
        .iter()
        .zip(coords)
        .map(|(s, [pc1, pc2])| PcaPoint {
            variant: s.variant,
            run_id: s.run_id.clone(),
            iteration: s.iteration,
            pc1,
            pc2,
        })
        .collect();
    Ok(ArchitecturePca {
        points,
        explained_ratio,
        feature_names: ARCHITECTURE_FEATURES.iter().map(|s| s.to_string()).collect(),
    })
}

/// Mean silhouette coefficient with Euclidean distances.
///
/// Points in singleton clusters score 0.
pub fn silhouette(x: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let n = x.rows();
    if labels.len() != n {
        return Err(crate::error::dim_err!("{n} points vs {} labels", labels.len()));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let present = (0..k).filter(|c| labels.contains(c)).count();
    if present < 2 {
        return Err(Error::Undefined("silhouette needs at least two clusters".into()));
    }
    let dist = |i: usize, j: usize| {
        x.row(i)
            .iter()
            .zip(x.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sum[labels[j]] += dist(i, j);
                count[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if count[own] == 0 {
            continue;
        }
        let a = sum[own] / count[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && count[c] > 0)
            .map(|c| sum[c] / count[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silhouette_separated_clusters() {
        let x = DenseMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
        ])
        .unwrap();
        let s = silhouette(&x, &[0, 0, 1, 1]).unwrap();
        assert!(s > 0.95);
        let mixed = silhouette(&x, &[0, 1, 0, 1]).unwrap();
        assert!(mixed < 0.0);
        assert!(silhouette(&x, &[0, 0, 0, 0]).is_err());
    }
}
