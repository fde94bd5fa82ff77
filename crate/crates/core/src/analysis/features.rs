use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{pearson_corr, DenseMatrix};
use crate::snapshot::{Condition, LayerRecord, Snapshot};

/// Cap applied to `log10(condition)`; infinite conditions map to it.
pub const LOG10_CONDITION_CAP: f64 = 12.0;

/// Per-layer group-B feature names, in column order.
pub const LAYER_FEATURES: [&str; 15] = [
    "weights_mean",
    "weights_std",
    "weights_min",
    "weights_max",
    "gradient_mean",
    "gradient_std",
    "gradient_min",
    "gradient_max",
    "hessian_eigens_mean",
    "hessian_eigens_std",
    "hessian_eigens_min",
    "hessian_eigens_max",
    "hessian_rank",
    "hessian_log10_condition",
    "near_zero_fraction",
];

pub const CLASSIFICATION_METRICS: [&str; 6] = ["Accuracy", "Precision", "Recall", "F1", "AUC", "train_loss"];
pub const REGRESSION_METRICS: [&str; 4] = ["R2", "neg_MAE", "neg_RMSE", "train_loss"];

/// `log10` of a condition number, capped.
pub fn log10_condition(c: Condition) -> f64 {
    match c {
        Condition::Finite(v) if v > 0.0 => v.log10().min(LOG10_CONDITION_CAP),
        _ => LOG10_CONDITION_CAP,
    }
}

/// Metric group A and parameter group B, one row per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureGroups {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub a_names: Vec<String>,
    pub b_names: Vec<String>,
    /// `(run_id, iteration)` per row.
    pub sample_keys: Vec<(String, usize)>,
}

impl FeatureGroups {
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// Copy without constant columns, plus the names of the dropped columns.
    pub fn drop_constant(&self) -> (FeatureGroups, Vec<String>) {
        let mut dropped = Vec::new();
        let mut keep = |m: &DenseMatrix, names: &[String]| {
            let cols: Vec<usize> = (0..m.cols())
                .filter(|&j| {
                    let c = m.column(j);
                    let constant = c.iter().all(|&v| v == c[0]);
                    if constant {
                        info!("dropping constant feature column {}", names[j]);
                        dropped.push(names[j].clone());
                    }
                    !constant
                })
                .collect();
            let kept_names = cols.iter().map(|&j| names[j].clone()).collect();
            (m.select_columns(&cols), kept_names)
        };
        let (a, a_names) = keep(&self.a, &self.a_names);
        let (b, b_names) = keep(&self.b, &self.b_names);
        (
            FeatureGroups {
                a,
                b,
                a_names,
                b_names,
                sample_keys: self.sample_keys.clone(),
            },
            dropped,
        )
    }
}

pub(crate) fn layer_features(l: &LayerRecord) -> [f64; 15] {
    let (w, g, e) = (&l.weights_spectral, &l.gradient_spectral, &l.hessian_eigens_spectral);
    [
        w.mean,
        w.std,
        w.min,
        w.max,
        g.mean,
        g.std,
        g.min,
        g.max,
        e.mean,
        e.std,
        e.min,
        e.max,
        l.hessian_rank as f64,
        log10_condition(l.hessian_condition),
        l.near_zero_fraction,
    ]
}

fn metric_row(s: &Snapshot, classification: bool) -> Result<Vec<f64>> {
    let sc = &s.scores;
    let missing = |name: &str| Error::Schema {
        line: 0,
        message: format!("{} iteration {}: missing score {name}", s.run_id, s.iteration),
    };
    let row = if classification {
        vec![
            sc.accuracy.ok_or_else(|| missing("Accuracy"))?,
            sc.precision.ok_or_else(|| missing("Precision"))?,
            sc.recall.ok_or_else(|| missing("Recall"))?,
            sc.f1.ok_or_else(|| missing("F1"))?,
            sc.auc.ok_or_else(|| missing("AUC"))?,
            sc.train_loss,
        ]
    } else {
        vec![
            sc.r2.ok_or_else(|| missing("R2"))?,
            -sc.mae.ok_or_else(|| missing("MAE"))?,
            -sc.rmse.ok_or_else(|| missing("RMSE"))?,
            sc.train_loss,
        ]
    };
    Ok(row)
}

/// Builds groups A and B from snapshots, ordered by `(run_id, iteration)`.
///
/// Group A holds the quality metrics; group B holds the 15 [`LAYER_FEATURES`]
/// of every layer, named `layer.<i>.<feature>`.
pub fn extract_features(snapshots: &[Snapshot]) -> Result<FeatureGroups> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("no snapshots to extract features from".into()))?;
    let classification = first.scores.is_classification();
    let n_layers = first.layers.len();
    let mut order: Vec<&Snapshot> = snapshots.iter().collect();
    order.sort_by(|x, y| (&x.run_id, x.iteration).cmp(&(&y.run_id, y.iteration)));

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut keys = Vec::with_capacity(order.len());
    for s in &order {
        if s.scores.is_classification() != classification {
            return Err(Error::InvalidArgument(
                "classification and regression snapshots cannot share one feature group".into(),
            ));
        }
        if s.layers.len() != n_layers {
            return Err(Error::Schema {
                line: 0,
                message: format!(
                    "{} has {} layers, expected {n_layers}",
                    s.run_id,
                    s.layers.len()
                ),
            });
        }
        a.extend(metric_row(s, classification)?);
        for l in &s.layers {
            b.extend(layer_features(l));
        }
        keys.push((s.run_id.clone(), s.iteration));
    }
    let a_names: Vec<String> = if classification {
        CLASSIFICATION_METRICS.iter().map(|s| s.to_string()).collect()
    } else {
        REGRESSION_METRICS.iter().map(|s| s.to_string()).collect()
    };
    let b_names: Vec<String> = (0..n_layers)
        .flat_map(|i| LAYER_FEATURES.iter().map(move |f| format!("layer.{i}.{f}")))
        .collect();
    let n = order.len();
    Ok(FeatureGroups {
        a: DenseMatrix::new(n, a_names.len(), a)?,
        b: DenseMatrix::new(n, b_names.len(), b)?,
        a_names,
        b_names,
        sample_keys: keys,
    })
}

/// Pearson correlations over every A and B column; `None` where a column is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    /// Plot-ready CSV; undefined entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push(',');
                match v {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn correlation_matrix(features: &FeatureGroups) -> Result<CorrelationMatrix> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation matrix needs at least 2 rows, got {n}"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..features.a.cols())
        .map(|j| features.a.column(j))
        .chain((0..features.b.cols()).map(|j| features.b.column(j)))
        .collect();
    let names: Vec<String> = features.a_names.iter().chain(&features.b_names).cloned().collect();
    let m = columns.len();
    let mut values = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            let r = if i == j {
                pearson_corr(&columns[i], &columns[i]).ok().map(|_| 1.0)
            } else {
                pearson_corr(&columns[i], &columns[j]).ok()
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { names, values })
}
