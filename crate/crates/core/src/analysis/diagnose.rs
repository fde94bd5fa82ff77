use serde::{Deserialize, Serialize};

use super::similarity::{profile_similarity, snapshot_weights};
use crate::error::{Error, Result};
use crate::snapshot::{Condition, LayerRecord, Snapshot};

/// Cutoffs for the diagnostic rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticThresholds {
    pub near_zero_fraction: f64,
    pub low_expressivity_max_eigen: f64,
    pub saddle_symmetry: f64,
    pub saddle_gradient_norm: f64,
    pub ill_conditioned: f64,
    pub low_rank_ratio: f64,
}

impl Default for DiagnosticThresholds {
    fn default() -> Self {
        Self {
            near_zero_fraction: 0.9,
            low_expressivity_max_eigen: 1e-3,
            saddle_symmetry: 0.9,
            saddle_gradient_norm: 1e-3,
            ill_conditioned: 1e6,
            low_rank_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    OverparameterizedNearZero,
    SaddleSuspect,
    LowExpressivity,
    IllConditioned,
    LowRankRedundancy,
}

impl FlagKind {
    pub const ALL: [FlagKind; 5] = [
        FlagKind::OverparameterizedNearZero,
        FlagKind::SaddleSuspect,
        FlagKind::LowExpressivity,
        FlagKind::IllConditioned,
        FlagKind::LowRankRedundancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlagKind::OverparameterizedNearZero => "overparameterized_near_zero",
            FlagKind::SaddleSuspect => "saddle_suspect",
            FlagKind::LowExpressivity => "low_expressivity",
            FlagKind::IllConditioned => "ill_conditioned",
            FlagKind::LowRankRedundancy => "low_rank_redundancy",
        }
    }

    fn recommendation(self) -> &'static str {
        match self {
            FlagKind::OverparameterizedNearZero => {
                "most curvature in the late layers is near zero; the model is likely overparameterized or saturated, consider fewer units or a smaller init scale"
            }
            FlagKind::SaddleSuspect => {
                "balanced Hessian spectrum with a vanishing gradient; training may be stalled near a saddle point"
            }
            FlagKind::LowExpressivity => {
                "early layers carry almost no curvature; consider a larger learning rate or a different activation"
            }
            FlagKind::IllConditioned => {
                "large condition number; an adaptive optimizer such as Adam or RMSProp is advisable"
            }
            FlagKind::LowRankRedundancy => {
                "Hessian rank is small relative to the parameter count; many parameters are redundant"
            }
        }
    }
}

impl std::fmt::Display for FlagKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// A fired rule with the values that triggered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub layer: usize,
    pub kind: FlagKind,
    pub evidence: f64,
    pub threshold: f64,
    /// Second condition, used by `saddle_suspect` (gradient infinity norm).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub secondary_evidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub secondary_threshold: Option<f64>,
}

/// Per-layer change between the first and final snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrend {
    pub layer: usize,
    pub near_zero_first: f64,
    pub near_zero_final: f64,
    pub max_abs_eigen_first: f64,
    pub max_abs_eigen_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub run_id: String,
    pub iteration: usize,
    pub layers: usize,
    pub thresholds: DiagnosticThresholds,
    pub flags: Vec<Flag>,
    /// `None` where a layer has an all-zero weight matrix.
    pub adjacent_similarity: Vec<Option<f64>>,
    pub trend: Vec<LayerTrend>,
    pub recommendations: Vec<String>,
}

impl DiagnosticsReport {
    pub fn fired(&self, kind: FlagKind) -> bool {
        self.flags.iter().any(|f| f.kind == kind)
    }

    pub fn fired_on(&self, kind: FlagKind, layer: usize) -> bool {
        self.flags.iter().any(|f| f.kind == kind && f.layer == layer)
    }

    /// Plain-text table of flags followed by recommendations.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "run {} at iteration {} ({} layers)\n",
            self.run_id, self.iteration, self.layers
        );
        if self.flags.is_empty() {
            out.push_str("no warnings\n");
        } else {
            out.push_str(&format!(
                "{:<6} {:<28} {:>14} {:>14}\n",
                "layer", "flag", "evidence", "threshold"
            ));
            for f in &self.flags {
                out.push_str(&format!(
                    "{:<6} {:<28} {:>14} {:>14}\n",
                    f.layer,
                    f.kind,
                    number(f.evidence),
                    number(f.threshold)
                ));
                if let (Some(e), Some(t)) = (f.secondary_evidence, f.secondary_threshold) {
                    out.push_str(&format!(
                        "{:<6} {:<28} {:>14} {:>14}\n",
                        "",
                        "  gradient_inf_norm",
                        number(e),
                        number(t)
                    ));
                }
            }
        }
        if !self.adjacent_similarity.is_empty() {
            out.push_str("adjacent layer similarity:");
            for s in &self.adjacent_similarity {
                match s {
                    Some(v) => out.push_str(&format!(" {v:.4}")),
                    None => out.push_str(" NA"),
                }
            }
            out.push('\n');
        }
        for r in &self.recommendations {
            out.push_str(&format!("- {r}\n"));
        }
        out
    }
}

fn number(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

fn late_layers(n: usize) -> std::ops::Range<usize> {
    n - n.div_ceil(2)..n
}

fn early_layers(n: usize) -> std::ops::Range<usize> {
    0..n.div_ceil(2)
}

fn layer_flags(i: usize, l: &LayerRecord, n: usize, t: &DiagnosticThresholds) -> Vec<Flag> {
    let flag = |kind, evidence, threshold| Flag {
        layer: i,
        kind,
        evidence,
        threshold,
        secondary_evidence: None,
        secondary_threshold: None,
    };
    let mut out = Vec::new();
    if late_layers(n).contains(&i) && l.near_zero_fraction > t.near_zero_fraction {
        out.push(flag(FlagKind::OverparameterizedNearZero, l.near_zero_fraction, t.near_zero_fraction));
    }
    let grad = l.gradient_inf_norm();
    if l.symmetry_score > t.saddle_symmetry && grad < t.saddle_gradient_norm {
        out.push(Flag {
            secondary_evidence: Some(grad),
            secondary_threshold: Some(t.saddle_gradient_norm),
            ..flag(FlagKind::SaddleSuspect, l.symmetry_score, t.saddle_symmetry)
        });
    }
    let max_eigen = l.max_abs_eigen();
    if early_layers(n).contains(&i) && max_eigen < t.low_expressivity_max_eigen {
        out.push(flag(FlagKind::LowExpressivity, max_eigen, t.low_expressivity_max_eigen));
    }
    if let Condition::Finite(c) = l.hessian_condition {
        if c > t.ill_conditioned {
            out.push(flag(FlagKind::IllConditioned, c, t.ill_conditioned));
        }
    }
    let ratio = l.hessian_rank as f64 / l.param_count() as f64;
    if ratio < t.low_rank_ratio {
        out.push(flag(FlagKind::LowRankRedundancy, ratio, t.low_rank_ratio));
    }
    out
}

/// Applies the diagnostic rules to the final snapshot of a stream.
pub fn diagnose(stream: &[Snapshot], thresholds: &DiagnosticThresholds) -> Result<DiagnosticsReport> {
    let (first, last) = match (stream.first(), stream.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidArgument("cannot diagnose an empty stream".into())),
    };
    let n = last.layers.len();
    let flags: Vec<Flag> = last
        .layers
        .iter()
        .enumerate()
        .flat_map(|(i, l)| layer_flags(i, l, n, thresholds))
        .collect();

    let weights = snapshot_weights(last)?;
    let adjacent_similarity = weights
        .windows(2)
        .map(|w| match profile_similarity(&w[0], &w[1]) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Undefined(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let trend = first
        .layers
        .iter()
        .zip(&last.layers)
        .enumerate()
        .map(|(i, (a, b))| LayerTrend {
            layer: i,
            near_zero_first: a.near_zero_fraction,
            near_zero_final: b.near_zero_fraction,
            max_abs_eigen_first: a.max_abs_eigen(),
            max_abs_eigen_final: b.max_abs_eigen(),
        })
        .collect();

    let recommendations = FlagKind::ALL
        .iter()
        .filter_map(|&k| {
            let layers: Vec<String> = flags
                .iter()
                .filter(|f| f.kind == k)
                .map(|f| f.layer.to_string())
                .collect();
            (!layers.is_empty()).then(|| format!("{k} (layers {}): {}", layers.join(", "), k.recommendation()))
        })
        .collect();

    Ok(DiagnosticsReport {
        run_id: last.run_id.clone(),
        iteration: last.iteration,
        layers: n,
        thresholds: *thresholds,
        flags,
        adjacent_similarity,
        trend,
        recommendations,
    })
}
