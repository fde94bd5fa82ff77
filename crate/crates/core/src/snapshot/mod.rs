//! Per-checkpoint state records and their JSON-Lines stream format.
//!
//! A stream file starts with a header line
//! `{"schema":"lhessian-snapshot","schema_version":"1.0"}` followed by one
//! [`Snapshot`] object per line. Layers appear as top-level keys
//! `"layer.0"`, `"layer.1"`, ... in network order.

mod io;
mod validate;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{dim_err, Result};
use crate::local_hessian::{hessian_rowwise, neuron_blocks_rowwise, LocalHessian, NeuronBlockHessian};
use crate::network::{ActivationKind, Network};
use crate::spectral::{
    hessian_spectrum, neuron_block_spectrum, series_summary, HessianSpectrum, SpectralSummary,
};
use crate::training::{MetricReport, Variant};

pub use io::{read_stream, read_stream_lenient, write_stream, StreamHeader};
pub use validate::{validate, validate_str, ValidationReport, Violation};

pub const SCHEMA_NAME: &str = "lhessian-snapshot";
pub const SCHEMA_VERSION: &str = "1.0";

/// Condition number, or infinite for rank-deficient Hessians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Finite(f64),
    Infinite,
}

impl Condition {
    pub fn from_option(c: Option<f64>) -> Self {
        c.map_or(Condition::Infinite, Condition::Finite)
    }

    pub fn value(self) -> f64 {
        match self {
            Condition::Finite(v) => v,
            Condition::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Condition::Finite(v) => s.serialize_f64(*v),
            Condition::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Condition::Finite)
                .ok_or_else(|| de::Error::custom("condition is not a float")),
            Value::String(s) if s == "infinite" => Ok(Condition::Infinite),
            other => Err(de::Error::custom(format!(
                "condition must be a number or \"infinite\", got {other}"
            ))),
        }
    }
}

/// How a layer's Hessian was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianLayout {
    /// Full `p x p` matrix.
    Dense,
    /// Per-unit `(d + 1) x (d + 1)` diagonal blocks; `hessian_spectral` summarizes block entries.
    NeuronBlocks,
}

/// Local Hessian of one layer in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerHessian {
    Dense(LocalHessian),
    Blocks(NeuronBlockHessian),
}

impl LayerHessian {
    pub fn dim(&self) -> usize {
        match self {
            LayerHessian::Dense(h) => h.dim(),
            LayerHessian::Blocks(b) => b.dim(),
        }
    }

    pub fn spectrum(&self) -> Result<HessianSpectrum> {
        match self {
            LayerHessian::Dense(h) => hessian_spectrum(h),
            LayerHessian::Blocks(b) => neuron_block_spectrum(b),
        }
    }
}

/// Local Hessians of every block at the probe input; layers with more than
/// `dense_cap` parameters use the block-diagonal form.
pub fn layer_hessians(net: &Network, probe: &[f64], dense_cap: usize) -> Result<Vec<LayerHessian>> {
    let trace = net.forward(probe)?;
    net.blocks()
        .iter()
        .zip(&trace.inputs)
        .map(|(block, z)| {
            if block.param_count() <= dense_cap {
                hessian_rowwise(block, z).map(LayerHessian::Dense)
            } else {
                neuron_blocks_rowwise(block, z).map(LayerHessian::Blocks)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub activation: ActivationKind,
    /// `[q, d]`
    pub weights_shape: [usize; 2],
    /// Row-major.
    pub weights: Vec<f64>,
    pub weights_spectral: SpectralSummary,
    pub gradient: Vec<f64>,
    pub gradient_spectral: SpectralSummary,
    pub bias: Vec<f64>,
    pub bias_spectral: SpectralSummary,
    pub bias_gradient: Vec<f64>,
    pub bias_gradient_spectral: SpectralSummary,
    /// Rows of the raw matrix; `null` above the storage cap.
    pub hessian: Option<Vec<Vec<f64>>>,
    pub hessian_layout: HessianLayout,
    pub hessian_spectral: SpectralSummary,
    /// Ascending, length `p`.
    pub hessian_eigens: Vec<f64>,
    pub hessian_eigens_spectral: SpectralSummary,
    pub hessian_rank: usize,
    pub hessian_condition: Condition,
    pub hessian_trace: f64,
    pub hessian_log_abs_det: f64,
    pub near_zero_fraction: f64,
    pub symmetry_score: f64,
}

impl LayerRecord {
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Largest eigenvalue magnitude.
    pub fn max_abs_eigen(&self) -> f64 {
        self.hessian_eigens.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Infinity norm over weight and bias gradients.
    pub fn gradient_inf_norm(&self) -> f64 {
        self.gradient
            .iter()
            .chain(&self.bias_gradient)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub run_id: String,
    pub variant: Variant,
    pub dataset: String,
    pub iteration: usize,
    pub layers: Vec<LayerRecord>,
    /// Training-split metrics.
    pub scores: MetricReport,
    pub holdout_scores: Option<MetricReport>,
}

impl Snapshot {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerRecord::param_count).sum()
    }
}

pub fn layer_key(i: usize) -> String {
    format!("layer.{i}")
}

impl Serialize for Snapshot {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let extra = usize::from(self.holdout_scores.is_some());
        let mut m = s.serialize_map(Some(5 + self.layers.len() + extra))?;
        m.serialize_entry("run_id", &self.run_id)?;
        m.serialize_entry("variant", &self.variant)?;
        m.serialize_entry("dataset", &self.dataset)?;
        m.serialize_entry("iteration", &self.iteration)?;
        for (i, layer) in self.layers.iter().enumerate() {
            m.serialize_entry(&layer_key(i), layer)?;
        }
        m.serialize_entry("scores", &self.scores)?;
        if let Some(h) = &self.holdout_scores {
            m.serialize_entry("holdout_scores", h)?;
        }
        m.end()
    }
}

fn take<T: serde::de::DeserializeOwned, E: de::Error>(map: &mut Map<String, Value>, key: &str) -> std::result::Result<T, E> {
    let v = map
        .remove(key)
        .ok_or_else(|| E::custom(format!("missing field `{key}`")))?;
    serde_json::from_value(v).map_err(|e| E::custom(format!("{key}: {e}")))
}

impl<'de> Deserialize<'de> for Snapshot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut map = Map::<String, Value>::deserialize(d)?;
        let run_id = take(&mut map, "run_id")?;
        let variant = take(&mut map, "variant")?;
        let dataset = take(&mut map, "dataset")?;
        let iteration = take(&mut map, "iteration")?;
        let scores = take(&mut map, "scores")?;
        let holdout_scores = match map.remove("holdout_scores") {
            Some(v) => Some(serde_json::from_value(v).map_err(de::Error::custom)?),
            None => None,
        };
        let mut layers = Vec::new();
        while let Some(v) = map.remove(&layer_key(layers.len())) {
            let rec: LayerRecord = serde_json::from_value(v)
                .map_err(|e| de::Error::custom(format!("{}: {e}", layer_key(layers.len()))))?;
            layers.push(rec);
        }
        if layers.is_empty() {
            return Err(de::Error::custom("snapshot has no layer.0"));
        }
        if let Some(k) = map.keys().next() {
            return Err(de::Error::custom(format!("unexpected field `{k}`")));
        }
        Ok(Snapshot {
            run_id,
            variant,
            dataset,
            iteration,
            layers,
            scores,
            holdout_scores,
        })
    }
}

/// Identity of the run a snapshot belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub run_id: String,
    pub variant: Variant,
    pub dataset: String,
    pub iteration: usize,
}

/// Builds the snapshot of a network state; raw Hessians are kept for layers with at most `store_cap` parameters.
pub fn capture(
    net: &Network,
    gradients: &[Vec<f64>],
    hessians: &[LayerHessian],
    scores: MetricReport,
    meta: SnapshotMeta,
    store_cap: usize,
) -> Result<Snapshot> {
    let n = net.blocks().len();
    if gradients.len() != n || hessians.len() != n {
        return Err(dim_err!(
            "{n} blocks, {} gradients, {} Hessians",
            gradients.len(),
            hessians.len()
        ));
    }
    let mut layers = Vec::with_capacity(n);
    for ((block, g), h) in net.blocks().iter().zip(gradients).zip(hessians) {
        let p = block.param_count();
        if g.len() != p || h.dim() != p {
            return Err(dim_err!(
                "layer {}: {p} parameters, gradient {}, Hessian {}",
                block.layer_index,
                g.len(),
                h.dim()
            ));
        }
        let nw = block.outputs() * block.inputs();
        let spectrum = h.spectrum()?;
        let (layout, hessian_spectral, raw) = match h {
            LayerHessian::Dense(lh) => {
                let raw = (p <= store_cap).then(|| (0..p).map(|i| lh.matrix.row(i).to_vec()).collect());
                (HessianLayout::Dense, series_summary(lh.matrix.data())?, raw)
            }
            LayerHessian::Blocks(b) => {
                let entries: Vec<f64> = b.blocks.iter().flat_map(|m| m.data().iter().copied()).collect();
                let raw = (p <= store_cap).then(|| {
                    let d = b.to_dense();
                    (0..p).map(|i| d.matrix.row(i).to_vec()).collect()
                });
                (HessianLayout::NeuronBlocks, series_summary(&entries)?, raw)
            }
        };
        let weights = block.weights.data().to_vec();
        let gradient = g[..nw].to_vec();
        let bias_gradient = g[nw..].to_vec();
        layers.push(LayerRecord {
            activation: block.activation,
            weights_shape: [block.outputs(), block.inputs()],
            weights_spectral: series_summary(&weights)?,
            weights,
            gradient_spectral: series_summary(&gradient)?,
            gradient,
            bias_spectral: series_summary(&block.bias)?,
            bias: block.bias.clone(),
            bias_gradient_spectral: series_summary(&bias_gradient)?,
            bias_gradient,
            hessian: raw,
            hessian_layout: layout,
            hessian_spectral,
            hessian_eigens_spectral: series_summary(&spectrum.eigenvalues)?,
            hessian_rank: spectrum.rank,
            hessian_condition: Condition::from_option(spectrum.condition),
            hessian_trace: spectrum.trace,
            hessian_log_abs_det: spectrum.log_abs_det,
            near_zero_fraction: spectrum.near_zero_fraction,
            symmetry_score: spectrum.symmetry_score,
            hessian_eigens: spectrum.eigenvalues,
        });
    }
    Ok(Snapshot {
        run_id: meta.run_id,
        variant: meta.variant,
        dataset: meta.dataset,
        iteration: meta.iteration,
        layers,
        scores,
        holdout_scores: None,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numerics::{sym_eigenvalues, DenseMatrix};
    use crate::rng::Rng64;

    fn meta(iteration: usize) -> SnapshotMeta {
        SnapshotMeta {
            run_id: "t-no-s0".into(),
            variant: Variant::No,
            dataset: "t".into(),
            iteration,
        }
    }

    pub(crate) fn sample(seed: u64, iteration: usize) -> Snapshot {
        let mut rng = Rng64::new(seed);
        let net = Network::init(&[3, 4, 2], &[ActivationKind::Tanh; 2], 1.0, &mut rng).unwrap();
        let grads: Vec<Vec<f64>> = net
            .blocks()
            .iter()
            .map(|b| (0..b.param_count()).map(|_| rng.normal()).collect())
            .collect();
        let h = layer_hessians(&net, &[0.3, -1.1, 0.8], 2048).unwrap();
        let scores = MetricReport {
            accuracy: Some(0.5),
            precision: Some(0.25),
            recall: Some(0.5),
            f1: Some(1.0 / 3.0),
            auc: Some(0.6),
            train_loss: 0.7,
            ..Default::default()
        };
        capture(&net, &grads, &h, scores, meta(iteration), 2048).unwrap()
    }

    #[test]
    fn identity_net_zero_hessian() {
        let mut rng = Rng64::new(1);
        let net = Network::init(&[2, 3], &[ActivationKind::Identity], 1.0, &mut rng).unwrap();
        let g = vec![vec![0.0; 9]];
        let h = layer_hessians(&net, &[1.0, 2.0], 2048).unwrap();
        let s = capture(&net, &g, &h, MetricReport::default(), meta(0), 2048).unwrap();
        assert!(s.layers[0].hessian_eigens.iter().all(|&v| v == 0.0));
        assert_eq!(s.layers[0].hessian_rank, 0);
        assert_eq!(s.layers[0].hessian_condition, Condition::Infinite);
    }

    #[test]
    fn eigens_match_stored_hessian() {
        let s = sample(3, 0);
        for layer in &s.layers {
            let rows = layer.hessian.as_ref().unwrap();
            let m = DenseMatrix::from_rows(rows).unwrap();
            let e = sym_eigenvalues(&m).unwrap();
            for (a, b) in e.iter().zip(&layer.hessian_eigens) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(s.scores.f1, Some(1.0 / 3.0));
    }

    #[test]
    fn block_layout_matches_dense() {
        let mut rng = Rng64::new(8);
        let net = Network::init(&[3, 5, 2], &[ActivationKind::Sigmoid; 2], 1.0, &mut rng).unwrap();
        let dense = layer_hessians(&net, &[0.1, 0.2, -0.4], 2048).unwrap();
        let blocks = layer_hessians(&net, &[0.1, 0.2, -0.4], 0).unwrap();
        for (a, b) in dense.iter().zip(&blocks) {
            let (sa, sb) = (a.spectrum().unwrap(), b.spectrum().unwrap());
            assert_eq!(sa.rank, sb.rank);
            for (x, y) in sa.eigenvalues.iter().zip(&sb.eigenvalues) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn misaligned_inputs() {
        let mut rng = Rng64::new(1);
        let net = Network::init(&[2, 3], &[ActivationKind::Tanh], 1.0, &mut rng).unwrap();
        let h = layer_hessians(&net, &[1.0, 2.0], 2048).unwrap();
        assert!(capture(&net, &[vec![0.0; 8]], &h, MetricReport::default(), meta(0), 10).is_err());
        assert!(capture(&net, &[], &h, MetricReport::default(), meta(0), 10).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = sample(5, 7);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"run_id\""));
        let back: Snapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
