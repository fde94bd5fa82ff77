use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::io::StreamHeader;
use super::layer_key;
use crate::error::{Error, Result};
use crate::network::ActivationKind;
use crate::spectral::{numerical_rank, HISTOGRAM_BINS, TOP_PEAKS};
use crate::training::Variant;

/// One schema problem, located by 1-based line and dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub snapshots: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const SPECTRAL_FIELDS: [(&str, Option<&str>); 6] = [
    ("weights_spectral", Some("weights")),
    ("gradient_spectral", Some("gradient")),
    ("bias_spectral", Some("bias")),
    ("bias_gradient_spectral", Some("bias_gradient")),
    ("hessian_spectral", None),
    ("hessian_eigens_spectral", Some("hessian_eigens")),
];
const CLASSIFICATION_SCORES: [&str; 5] = ["Accuracy", "Precision", "Recall", "F1", "AUC"];
const REGRESSION_SCORES: [&str; 3] = ["R2", "MAE", "RMSE"];

struct Checker {
    line: usize,
    out: Vec<Violation>,
}

impl Checker {
    fn flag(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation {
            line: self.line,
            field: field.into(),
            message: message.into(),
        });
    }

    fn get<'a>(&mut self, obj: &'a Map<String, Value>, prefix: &str, key: &str) -> Option<&'a Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.flag(join(prefix, key), "missing field");
        }
        v
    }

    fn number(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str) -> Option<f64> {
        match self.get(obj, prefix, key)? {
            Value::Number(n) => n.as_f64(),
            _ => {
                self.flag(join(prefix, key), "expected a number");
                None
            }
        }
    }

    fn count(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str) -> Option<u64> {
        let v = self.get(obj, prefix, key)?;
        let n = v.as_u64();
        if n.is_none() {
            self.flag(join(prefix, key), "expected a non-negative integer");
        }
        n
    }

    fn string<'a>(&mut self, obj: &'a Map<String, Value>, prefix: &str, key: &str) -> Option<&'a str> {
        let v = self.get(obj, prefix, key)?;
        let s = v.as_str();
        if s.is_none() {
            self.flag(join(prefix, key), "expected a string");
        }
        s
    }

    fn object<'a>(&mut self, obj: &'a Map<String, Value>, prefix: &str, key: &str) -> Option<&'a Map<String, Value>> {
        let v = self.get(obj, prefix, key)?;
        let o = v.as_object();
        if o.is_none() {
            self.flag(join(prefix, key), "expected an object");
        }
        o
    }

    fn numbers(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(obj, prefix, key)?;
        let parsed = v
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>());
        if parsed.is_none() {
            self.flag(join(prefix, key), "expected an array of numbers");
        }
        parsed
    }

    fn spectral(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str, len: Option<usize>) {
        let Some(s) = self.object(obj, prefix, key) else { return };
        let path = join(prefix, key);
        let mean = self.number(s, &path, "mean");
        let std = self.number(s, &path, "std");
        let min = self.number(s, &path, "min");
        let max = self.number(s, &path, "max");
        if let (Some(mean), Some(min), Some(max)) = (mean, min, max) {
            if !(min <= mean && mean <= max) {
                self.flag(&path, format!("expected min <= mean <= max, got {min}, {mean}, {max}"));
            }
        }
        if std.is_some_and(|s| s < 0.0) {
            self.flag(join(&path, "std"), "negative standard deviation");
        }
        if let Some(h) = self.object(s, &path, "histogram") {
            let hp = join(&path, "histogram");
            if let Some(edges) = self.numbers(h, &hp, "bin_edges") {
                if edges.len() != HISTOGRAM_BINS + 1 {
                    self.flag(join(&hp, "bin_edges"), format!("expected {} edges, got {}", HISTOGRAM_BINS + 1, edges.len()));
                }
            }
            let counts = self.get(h, &hp, "counts").map(|c| {
                c.as_array()
                    .and_then(|a| a.iter().map(Value::as_u64).collect::<Option<Vec<u64>>>())
            });
            match counts {
                Some(Some(c)) => {
                    if c.len() != HISTOGRAM_BINS {
                        self.flag(join(&hp, "counts"), format!("expected {HISTOGRAM_BINS} bins, got {}", c.len()));
                    }
                    let total: u64 = c.iter().sum();
                    if let Some(n) = len {
                        if total != n as u64 {
                            self.flag(join(&hp, "counts"), format!("counts sum to {total}, series has {n} values"));
                        }
                    }
                }
                Some(None) => self.flag(join(&hp, "counts"), "expected an array of counts"),
                None => {}
            }
        }
        self.numbers(s, &path, "welch");
        self.count(s, &path, "welch_window");
        if let Some(peaks) = self.get(s, &path, "top_peaks") {
            let pp = join(&path, "top_peaks");
            match peaks.as_array() {
                Some(arr) => {
                    if arr.len() > TOP_PEAKS {
                        self.flag(&pp, format!("at most {TOP_PEAKS} peaks, got {}", arr.len()));
                    }
                    let powers: Vec<Option<f64>> = arr
                        .iter()
                        .map(|p| {
                            let ok = p.get("bin").and_then(Value::as_u64).is_some()
                                && p.get("frequency").and_then(Value::as_f64).is_some();
                            p.get("power").and_then(Value::as_f64).filter(|_| ok)
                        })
                        .collect();
                    if powers.iter().any(Option::is_none) {
                        self.flag(&pp, "each peak needs bin, frequency and power");
                    } else if powers.windows(2).any(|w| w[0] < w[1]) {
                        self.flag(&pp, "peaks not sorted by descending power");
                    }
                }
                None => self.flag(&pp, "expected an array"),
            }
        }
    }

    fn scores(&mut self, obj: &Map<String, Value>, key: &str, required: bool) {
        if !required && !obj.contains_key(key) {
            return;
        }
        let Some(s) = self.object(obj, "", key) else { return };
        self.number(s, key, "train_loss");
        let class = CLASSIFICATION_SCORES.iter().any(|k| s.contains_key(*k));
        let names: &[&str] = if class { &CLASSIFICATION_SCORES } else { &REGRESSION_SCORES };
        for name in names {
            if let Some(v) = self.number(s, key, name) {
                if class && !(0.0..=1.0).contains(&v) {
                    self.flag(join(key, name), format!("{v} outside [0, 1]"));
                }
            }
        }
    }

    fn layer(&mut self, l: &Map<String, Value>, prefix: &str) {
        for k in l.keys() {
            if !LAYER_KEYS.contains(&k.as_str()) {
                self.flag(join(prefix, k), "unexpected field");
            }
        }
        if let Some(a) = self.string(l, prefix, "activation") {
            if ActivationKind::parse(a).is_none() {
                self.flag(join(prefix, "activation"), format!("unknown activation '{a}'"));
            }
        }
        let shape = self.get(l, prefix, "weights_shape").and_then(|v| {
            let s = v.as_array().and_then(|a| {
                (a.len() == 2).then(|| a.iter().map(Value::as_u64).collect::<Option<Vec<u64>>>()).flatten()
            });
            if s.is_none() {
                self.flag(join(prefix, "weights_shape"), "expected [rows, cols]");
            }
            s
        });
        let weights = self.numbers(l, prefix, "weights");
        let gradient = self.numbers(l, prefix, "gradient");
        let bias = self.numbers(l, prefix, "bias");
        let bias_gradient = self.numbers(l, prefix, "bias_gradient");
        let eigens = self.numbers(l, prefix, "hessian_eigens");
        let lens = |v: &Option<Vec<f64>>| v.as_ref().map(Vec::len);
        let series_len = |name: &str| match name {
            "weights" => lens(&weights),
            "gradient" => lens(&gradient),
            "bias" => lens(&bias),
            "bias_gradient" => lens(&bias_gradient),
            _ => lens(&eigens),
        };
        for (field, series) in SPECTRAL_FIELDS {
            let n = series.and_then(series_len);
            self.spectral(l, prefix, field, n);
        }

        let (q, d) = match shape.as_deref() {
            Some([q, d]) => (Some(*q as usize), Some(*d as usize)),
            _ => (None, None),
        };
        let p = q.zip(d).map(|(q, d)| q * d + q);
        if let (Some(q), Some(d)) = (q, d) {
            for (name, v, want) in [
                ("weights", &weights, q * d),
                ("gradient", &gradient, q * d),
                ("bias", &bias, q),
                ("bias_gradient", &bias_gradient, q),
                ("hessian_eigens", &eigens, q * d + q),
            ] {
                if let Some(v) = v {
                    if v.len() != want {
                        self.flag(join(prefix, name), format!("length {} but shape implies {want}", v.len()));
                    }
                }
            }
        }

        match self.get(l, prefix, "hessian") {
            Some(Value::Null) | None => {}
            Some(Value::Array(rows)) => {
                let square = rows.iter().all(|r| {
                    r.as_array()
                        .is_some_and(|c| c.len() == rows.len() && c.iter().all(Value::is_number))
                });
                if !square || p.is_some_and(|p| p != rows.len()) {
                    self.flag(join(prefix, "hessian"), "expected a p x p array of numbers or null");
                }
            }
            Some(_) => self.flag(join(prefix, "hessian"), "expected a p x p array of numbers or null"),
        }
        if let Some(layout) = self.string(l, prefix, "hessian_layout") {
            if layout != "dense" && layout != "neuron_blocks" {
                self.flag(join(prefix, "hessian_layout"), format!("unknown layout '{layout}'"));
            }
        }
        for key in ["hessian_trace", "hessian_log_abs_det"] {
            self.number(l, prefix, key);
        }
        for key in ["near_zero_fraction", "symmetry_score"] {
            if let Some(v) = self.number(l, prefix, key) {
                if !(0.0..=1.0).contains(&v) {
                    self.flag(join(prefix, key), format!("{v} outside [0, 1]"));
                }
            }
        }

        if let Some(e) = &eigens {
            if e.windows(2).any(|w| w[0] > w[1]) {
                self.flag(join(prefix, "hessian_eigens"), "eigenvalues not ascending");
            }
        }
        let rank = self.count(l, prefix, "hessian_rank");
        if let (Some(rank), Some(e)) = (rank, &eigens) {
            let expected = numerical_rank(e);
            if rank as usize != expected {
                self.flag(
                    join(prefix, "hessian_rank"),
                    format!("rank {rank} but eigenvalues give {expected}"),
                );
            }
        }
        let dim = eigens.as_ref().map(Vec::len).or(p);
        match self.get(l, prefix, "hessian_condition") {
            None => {}
            Some(Value::String(s)) if s == "infinite" => {
                if let (Some(rank), Some(dim)) = (rank, dim) {
                    if (rank as usize) == dim && dim > 0 {
                        self.flag(join(prefix, "hessian_condition"), "infinite condition for a full-rank Hessian");
                    }
                }
            }
            Some(Value::Number(n)) => {
                let c = n.as_f64().unwrap_or(f64::NAN);
                if !(c >= 1.0) {
                    self.flag(join(prefix, "hessian_condition"), format!("condition {c} below 1"));
                }
                if let (Some(rank), Some(dim)) = (rank, dim) {
                    if (rank as usize) < dim {
                        self.flag(join(prefix, "hessian_condition"), "finite condition for a rank-deficient Hessian");
                    }
                }
            }
            Some(_) => self.flag(join(prefix, "hessian_condition"), "expected a number or \"infinite\""),
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

struct RunIdentity {
    run_id: Option<String>,
    layers: usize,
    last_iteration: Option<u64>,
}

fn check_snapshot(c: &mut Checker, obj: &Map<String, Value>, run: &mut Option<RunIdentity>) {
    let run_id = c.string(obj, "", "run_id").map(str::to_string);
    if let Some(v) = c.string(obj, "", "variant") {
        if Variant::parse(v).is_err() {
            c.flag("variant", format!("unknown variant '{v}'"));
        }
    }
    c.string(obj, "", "dataset");
    let iteration = c.count(obj, "", "iteration");
    c.scores(obj, "scores", true);
    c.scores(obj, "holdout_scores", false);

    let mut n_layers = 0;
    while let Some(v) = obj.get(&layer_key(n_layers)) {
        let key = layer_key(n_layers);
        match v.as_object() {
            Some(l) => c.layer(l, &key),
            None => c.flag(&key, "expected an object"),
        }
        n_layers += 1;
    }
    if n_layers == 0 {
        c.flag("layer.0", "missing field");
    }
    for k in obj.keys() {
        let known = matches!(
            k.as_str(),
            "run_id" | "variant" | "dataset" | "iteration" | "scores" | "holdout_scores"
        ) || k
            .strip_prefix("layer.")
            .and_then(|i| i.parse::<usize>().ok())
            .is_some_and(|i| i < n_layers);
        if !known {
            c.flag(k.as_str(), "unexpected field");
        }
    }

    match run {
        None => {
            *run = Some(RunIdentity {
                run_id,
                layers: n_layers,
                last_iteration: iteration,
            })
        }
        Some(r) => {
            if run_id.is_some() && r.run_id.is_some() && run_id != r.run_id {
                c.flag("run_id", "run_id changes within the stream");
            }
            if n_layers != r.layers {
                c.flag("layer", format!("{n_layers} layers but the stream started with {}", r.layers));
            }
            if let (Some(prev), Some(it)) = (r.last_iteration, iteration) {
                if it <= prev {
                    c.flag("iteration", format!("iteration {it} does not increase (previous {prev})"));
                }
            }
            if iteration.is_some() {
                r.last_iteration = iteration;
            }
        }
    }
}

const LAYER_KEYS: [&str; 21] = [
    "activation",
    "weights_shape",
    "weights",
    "weights_spectral",
    "gradient",
    "gradient_spectral",
    "bias",
    "bias_spectral",
    "bias_gradient",
    "bias_gradient_spectral",
    "hessian",
    "hessian_layout",
    "hessian_spectral",
    "hessian_eigens",
    "hessian_eigens_spectral",
    "hessian_rank",
    "hessian_condition",
    "hessian_trace",
    "hessian_log_abs_det",
    "near_zero_fraction",
    "symmetry_score",
];

/// Checks stream text against the snapshot schema.
pub fn validate_str(text: &str) -> ValidationReport {
    let mut c = Checker { line: 1, out: Vec::new() };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => c.flag("schema_version", "empty stream: missing header"),
        Some((_, header)) => {
            if let Err(m) = StreamHeader::check(header) {
                c.flag("schema_version", m);
            }
        }
    }
    let mut snapshots = 0;
    let mut run = None;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        c.line = i + 1;
        snapshots += 1;
        match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(obj)) => check_snapshot(&mut c, &obj, &mut run),
            Ok(_) => c.flag("", "expected a JSON object"),
            Err(e) => c.flag("", format!("malformed JSON: {e}")),
        }
    }
    ValidationReport {
        snapshots,
        violations: c.out,
    }
}

/// Checks a stream file: header, field presence and types, per-layer invariants and iteration order.
pub fn validate(path: &Path) -> Result<ValidationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(validate_str(&text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::tests::sample;
    use crate::snapshot::StreamHeader;

    fn stream(snaps: &[crate::snapshot::Snapshot]) -> String {
        let mut s = serde_json::to_string(&StreamHeader::current()).unwrap();
        s.push('\n');
        for x in snaps {
            s.push_str(&serde_json::to_string(x).unwrap());
            s.push('\n');
        }
        s
    }

    #[test]
    fn fresh_stream_is_valid() {
        let r = validate_str(&stream(&[sample(1, 0), sample(2, 5)]));
        assert_eq!(r.violations, vec![]);
        assert_eq!(r.snapshots, 2);
    }

    #[test]
    fn deleted_rank_is_one_violation() {
        let text = stream(&[sample(1, 0)]).replacen("\"hessian_rank\":", "\"hessian_rank_gone\":", 1);
        let r = validate_str(&text);
        let missing: Vec<_> = r.violations.iter().filter(|v| v.field.ends_with("hessian_rank")).collect();
        assert_eq!(missing.len(), 1, "{:?}", r.violations);
        assert_eq!(missing[0].line, 2);
        assert_eq!(missing[0].field, "layer.0.hessian_rank");
    }

    #[test]
    fn non_monotone_iterations() {
        let r = validate_str(&stream(&[sample(1, 10), sample(1, 10)]));
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "iteration");
        assert_eq!(r.violations[0].line, 3);
    }

    #[test]
    fn empty_and_wrong_version() {
        assert!(!validate_str("").is_valid());
        let text = stream(&[]).replace("1.0", "0.9");
        assert_eq!(validate_str(&text).violations[0].field, "schema_version");
    }
}
