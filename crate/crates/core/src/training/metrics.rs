use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::DenseMatrix;

/// Quality metrics of one model state. Unused task-specific fields are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "Accuracy", default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(rename = "Precision", default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(rename = "Recall", default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(rename = "F1", default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(rename = "AUC", default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(rename = "R2", default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(rename = "MAE", default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    #[serde(rename = "RMSE", default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub train_loss: f64,
}

impl MetricReport {
    pub fn is_classification(&self) -> bool {
        self.accuracy.is_some()
    }

    /// `(name, value)` pairs of the populated metrics, train_loss last.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("Accuracy", self.accuracy),
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("F1", self.f1),
            ("AUC", self.auc),
            ("R2", self.r2),
            ("MAE", self.mae),
            ("RMSE", self.rmse),
        ] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out.push(("train_loss", self.train_loss));
        out
    }
}

/// Area under the ROC curve from the Mann-Whitney rank statistic; ties count one half.
pub fn binary_auc(positive: &[bool], scores: &[f64]) -> Result<f64> {
    if positive.len() != scores.len() {
        return Err(dim_err!("{} labels vs {} scores", positive.len(), scores.len()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("AUC needs both positive and negative samples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if positive[k] {
                rank_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Accuracy, macro precision/recall/F1 and AUC (macro one-vs-rest for more than two classes).
///
/// `scores` is `samples x k` class probabilities, or `samples x 1`
/// positive-class scores thresholded at 0.5. Empty denominators count as 0.
pub fn classification_metrics(targets: &[usize], scores: &DenseMatrix) -> Result<MetricReport> {
    let n = targets.len();
    if n == 0 || scores.rows() != n || scores.cols() == 0 {
        return Err(dim_err!("{n} targets vs {}x{} scores", scores.rows(), scores.cols()));
    }
    let k = scores.cols().max(2);
    if let Some(&bad) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::InvalidArgument(format!("class index {bad} out of range for {k} classes")));
    }
    let predicted: Vec<usize> = (0..n)
        .map(|i| {
            if scores.cols() == 1 {
                usize::from(scores[(i, 0)] >= 0.5)
            } else {
                argmax(scores.row(i))
            }
        })
        .collect();

    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let correct = targets.iter().zip(&predicted).filter(|(t, p)| t == p).count();
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = (0..n).filter(|&i| targets[i] == c && predicted[i] == c).count();
        let pred_c = predicted.iter().filter(|&&p| p == c).count();
        let true_c = targets.iter().filter(|&&t| t == c).count();
        let (pc, rc) = (ratio(tp, pred_c), ratio(tp, true_c));
        precision += pc;
        recall += rc;
        f1 += if pc + rc > 0.0 { 2.0 * pc * rc / (pc + rc) } else { 0.0 };
    }

    let auc = if k == 2 {
        let s: Vec<f64> = (0..n).map(|i| scores[(i, scores.cols() - 1)]).collect();
        let pos: Vec<bool> = targets.iter().map(|&t| t == 1).collect();
        binary_auc(&pos, &s)?
    } else {
        let mut sum = 0.0;
        let mut used = 0;
        for c in 0..k {
            let pos: Vec<bool> = targets.iter().map(|&t| t == c).collect();
            if let Ok(a) = binary_auc(&pos, &scores.column(c)) {
                sum += a;
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::Undefined("AUC needs at least two classes present".into()));
        }
        sum / used as f64
    };

    Ok(MetricReport {
        accuracy: Some(correct as f64 / n as f64),
        precision: Some(precision / k as f64),
        recall: Some(recall / k as f64),
        f1: Some(f1 / k as f64),
        auc: Some(auc),
        ..Default::default()
    })
}

/// R2, MAE and RMSE.
pub fn regression_metrics(targets: &[f64], predictions: &[f64]) -> Result<MetricReport> {
    let n = targets.len();
    if n == 0 || predictions.len() != n {
        return Err(dim_err!("{n} targets vs {} predictions", predictions.len()));
    }
    let mean = targets.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined("R2 of constant targets".into()));
    }
    let ss_res: f64 = targets.iter().zip(predictions).map(|(t, p)| (t - p) * (t - p)).sum();
    let mae = targets.iter().zip(predictions).map(|(t, p)| (t - p).abs()).sum::<f64>() / n as f64;
    let rmse = (ss_res / n as f64).sqrt();
    Ok(MetricReport {
        r2: Some(1.0 - ss_res / ss_tot),
        mae: Some(mae),
        // MAE <= RMSE holds mathematically; keep it exact under rounding.
        rmse: Some(rmse.max(mae)),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_classifier() {
        let r = classification_metrics(&[0, 1, 1, 0], &col(&[0.1, 0.9, 0.8, 0.2])).unwrap();
        for v in [r.accuracy, r.precision, r.recall, r.f1, r.auc] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn auc_pairwise() {
        let r = classification_metrics(&[0, 1, 1, 0], &col(&[0.1, 0.9, 0.3, 0.4])).unwrap();
        assert_eq!(r.auc, Some(0.75));
    }

    #[test]
    fn all_wrong() {
        let r = classification_metrics(&[0, 1, 1, 0], &col(&[0.9, 0.1, 0.2, 0.8])).unwrap();
        assert_eq!(r.accuracy, Some(0.0));
        assert_eq!(r.auc, Some(0.0));
    }

    #[test]
    fn single_class_auc_undefined() {
        assert!(matches!(
            classification_metrics(&[1, 1], &col(&[0.2, 0.7])),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn regression_known_values() {
        let r = regression_metrics(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(r.mae, Some(0.25));
        assert!((r.rmse.unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        let r = regression_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.r2, Some(0.0));
        let r = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.r2, r.mae, r.rmse), (Some(1.0), Some(0.0), Some(0.0)));
        assert!(regression_metrics(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
