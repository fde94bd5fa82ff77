//! Canned end-to-end experiments with machine-checkable outcomes.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::analysis::{analyze_streams, diagnose, AnalysisSummary, DiagnosticThresholds, DiagnosticsReport, FlagKind};
use crate::datasets::{generate, DatasetSpec, Generator};
use crate::error::{Error, Result};
use crate::network::ActivationKind;
use crate::snapshot::{validate, write_stream, Snapshot};
use crate::training::{train_many, MetricReport, Optimizer, TrainConfig, TrainRun, Variant};

/// Hessian storage cap used by presets and the command line.
pub const PRESET_HESSIAN_STORE_CAP: usize = 256;
pub const PRESET_ITERATIONS: usize = 200;
pub const PRESET_CHECKPOINT_EVERY: usize = 25;
pub const PRESET_LR: f64 = 0.01;
pub const PRESET_SAMPLES: usize = 400;
/// Init multiplier of the scaled run in `saturation`.
pub const SATURATION_INIT_SCALE: f64 = 10.0;
/// Minimum final-layer near-zero fraction required of the scaled run.
pub const SATURATION_MIN_NEAR_ZERO: f64 = 0.9;
pub const FRIEDMAN_MIN_R2: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Saturation,
    VariantsBlobs,
    VariantsMoons,
    RegressionFriedman,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::Saturation,
        PresetName::VariantsBlobs,
        PresetName::VariantsMoons,
        PresetName::RegressionFriedman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetName::Saturation => "saturation",
            PresetName::VariantsBlobs => "variants_blobs",
            PresetName::VariantsMoons => "variants_moons",
            PresetName::RegressionFriedman => "regression_friedman",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::InvalidArgument(format!("unknown preset '{s}'; valid presets: {}", names.join(", ")))
        })
    }

    /// Seed whose outcome has been checked.
    pub fn default_seed(self) -> u64 {
        match self {
            PresetName::Saturation => 3,
            _ => 7,
        }
    }
}

impl std::fmt::Display for PresetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Dataset plus the training configurations of a preset.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub runs: Vec<TrainConfig>,
}

fn preset_config(variant: Variant, spec: &DatasetSpec, seed: u64) -> TrainConfig {
    let mut c = TrainConfig::for_variant(variant, spec.generator.task(), seed);
    c.optimizer = Optimizer::ADAM.with_lr(PRESET_LR);
    c.iterations = PRESET_ITERATIONS;
    c.checkpoint_every = PRESET_CHECKPOINT_EVERY;
    c.hessian_store_cap = PRESET_HESSIAN_STORE_CAP;
    c
}

impl Preset {
    pub fn new(name: PresetName, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(name.default_seed());
        let generator = match name {
            PresetName::Saturation | PresetName::VariantsMoons => Generator::Moons,
            PresetName::VariantsBlobs => Generator::Blobs,
            PresetName::RegressionFriedman => Generator::Friedman1,
        };
        let dataset = DatasetSpec::new(generator, PRESET_SAMPLES, seed);
        let runs = match name {
            PresetName::Saturation => {
                // All-Tanh, output layer included, so the last layer can saturate.
                let base = TrainConfig {
                    hidden: vec![8],
                    ..preset_config(Variant::No, &dataset, seed)
                }
                .with_activation(ActivationKind::Tanh);
                let control = TrainConfig {
                    tag: Some("control".into()),
                    ..base.clone()
                };
                let scaled = TrainConfig {
                    tag: Some("scaled".into()),
                    init_scale_multiplier: SATURATION_INIT_SCALE,
                    ..base
                };
                vec![control, scaled]
            }
            _ => Variant::ALL.iter().map(|&v| preset_config(v, &dataset, seed)).collect(),
        };
        Self {
            name,
            seed,
            dataset,
            runs,
        }
    }
}

/// One checked outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Predicate {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub variant: Variant,
    pub params: usize,
    pub snapshots: usize,
    pub final_scores: Option<MetricReport>,
    pub final_holdout: Option<MetricReport>,
    pub final_layer_near_zero: Option<f64>,
    pub violations: usize,
    pub flags: Vec<String>,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetOutcome {
    pub preset: PresetName,
    pub seed: u64,
    pub runs: Vec<RunSummary>,
    pub analysis: AnalysisSummary,
    pub predicates: Vec<Predicate>,
    pub artifacts: Vec<PathBuf>,
}

impl PresetOutcome {
    pub fn passed(&self) -> bool {
        self.predicates.iter().all(|p| p.passed)
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("preset {} (seed {})\n", self.preset, self.seed);
        for r in &self.runs {
            out.push_str(&format!(
                "  {:<32} params {:>6}  snapshots {:>3}  final-layer near-zero {}\n",
                r.run_id,
                r.params,
                r.snapshots,
                r.final_layer_near_zero.map_or("NA".into(), |v| format!("{v:.4}"))
            ));
        }
        for p in &self.predicates {
            out.push_str(&format!(
                "{} {}: {}\n",
                if p.passed { "PASS" } else { "FAIL" },
                p.name,
                p.detail
            ));
        }
        out
    }
}

/// `<outdir>/<run_id>.snapshots.jsonl`
pub fn stream_path(outdir: &Path, run_id: &str) -> PathBuf {
    outdir.join(format!("{run_id}.snapshots.jsonl"))
}

/// Writes `<run_id>.diagnostics.json` and `<run_id>.diagnostics.txt`.
pub fn write_diagnostics(report: &DiagnosticsReport, outdir: &Path) -> Result<Vec<PathBuf>> {
    let json = outdir.join(format!("{}.diagnostics.json", report.run_id));
    let text = outdir.join(format!("{}.diagnostics.txt", report.run_id));
    fs::write(&json, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(&json, e))?;
    fs::write(&text, report.to_text()).map_err(|e| Error::io(&text, e))?;
    Ok(vec![json, text])
}

fn final_layer_near_zero(s: &[Snapshot]) -> Option<f64> {
    s.last().and_then(|s| s.layers.last()).map(|l| l.near_zero_fraction)
}

/// Trains, validates, analyzes and diagnoses a preset, writing everything under `outdir`.
pub fn run_preset(preset: &Preset, outdir: &Path, jobs: usize) -> Result<PresetOutcome> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    info!("preset {}: seed {}", preset.name, preset.seed);
    let ds = generate(&preset.dataset)?;
    let mut artifacts = Vec::new();
    let csv = outdir.join(format!("{}.dataset.csv", ds.name));
    ds.write_csv(&csv)?;
    artifacts.push(csv);

    let runs: Vec<TrainRun> = train_many(&preset.runs, &ds, jobs).into_iter().collect::<Result<_>>()?;
    let thresholds = DiagnosticThresholds::default();
    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    for run in &runs {
        let path = stream_path(outdir, &run.run_id);
        write_stream(&run.snapshots, &path)?;
        let violations = validate(&path)?.violations.len();
        artifacts.push(path);
        let report = diagnose(&run.snapshots, &thresholds)?;
        artifacts.extend(write_diagnostics(&report, outdir)?);
        summaries.push(RunSummary {
            run_id: run.run_id.clone(),
            variant: run.config.variant,
            params: run.network.param_count(),
            snapshots: run.snapshots.len(),
            final_scores: run.snapshots.last().map(|s| s.scores.clone()),
            final_holdout: run.snapshots.last().and_then(|s| s.holdout_scores.clone()),
            final_layer_near_zero: final_layer_near_zero(&run.snapshots),
            violations,
            flags: report
                .flags
                .iter()
                .map(|f| format!("layer {} {}", f.layer, f.kind))
                .collect(),
            aborted: run.aborted.clone(),
        });
        reports.push(report);
    }
    let streams: Vec<Vec<Snapshot>> = runs.iter().map(|r| r.snapshots.clone()).collect();
    let analysis = analyze_streams(&streams, outdir, preset.name.name())?;
    artifacts.extend(analysis.files);

    let mut predicates = vec![Predicate::new(
        "streams_valid",
        summaries.iter().all(|r| r.violations == 0 && r.aborted.is_none()),
        format!(
            "violations per stream {:?}",
            summaries.iter().map(|r| r.violations).collect::<Vec<_>>()
        ),
    )];
    predicates.extend(match preset.name {
        PresetName::Saturation => saturation_predicates(&summaries, &reports),
        PresetName::RegressionFriedman => friedman_predicates(&summaries),
        PresetName::VariantsBlobs => variant_predicates(&summaries, Some(&reports), &analysis.summary),
        PresetName::VariantsMoons => variant_predicates(&summaries, None, &analysis.summary),
    });

    let outcome = PresetOutcome {
        preset: preset.name,
        seed: preset.seed,
        runs: summaries,
        analysis: analysis.summary,
        predicates,
        artifacts,
    };
    let json = outdir.join(format!("{}.preset.json", preset.name));
    let text = outdir.join(format!("{}.preset.txt", preset.name));
    fs::write(&json, serde_json::to_string_pretty(&outcome)?).map_err(|e| Error::io(&json, e))?;
    fs::write(&text, outcome.to_text()).map_err(|e| Error::io(&text, e))?;
    let mut outcome = outcome;
    outcome.artifacts.extend([json, text]);
    Ok(outcome)
}

fn saturation_predicates(runs: &[RunSummary], reports: &[DiagnosticsReport]) -> Vec<Predicate> {
    let (control, scaled) = (&runs[0], &runs[1]);
    let nz = |r: &RunSummary| r.final_layer_near_zero.unwrap_or(f64::NAN);
    let last = |r: &DiagnosticsReport| r.layers.saturating_sub(1);
    vec![
        Predicate::new(
            "scaled_exceeds_control",
            nz(scaled) > nz(control),
            format!("final-layer near-zero fraction {:.4} vs {:.4}", nz(scaled), nz(control)),
        ),
        Predicate::new(
            "scaled_near_zero_at_least_0.9",
            nz(scaled) >= SATURATION_MIN_NEAR_ZERO,
            format!("{:.4} >= {SATURATION_MIN_NEAR_ZERO}", nz(scaled)),
        ),
        Predicate::new(
            "scaled_flagged",
            reports[1].fired_on(FlagKind::OverparameterizedNearZero, last(&reports[1])),
            format!("{} on {}", FlagKind::OverparameterizedNearZero, scaled.run_id),
        ),
        Predicate::new(
            "control_not_flagged",
            !reports[0].fired(FlagKind::OverparameterizedNearZero),
            format!("{} absent on {}", FlagKind::OverparameterizedNearZero, control.run_id),
        ),
    ]
}

fn variant_predicates(
    runs: &[RunSummary],
    saddle_control: Option<&[DiagnosticsReport]>,
    analysis: &AnalysisSummary,
) -> Vec<Predicate> {
    let params: Vec<usize> = runs.iter().map(|r| r.params).collect();
    let sil = analysis.silhouette;
    let sure = runs.iter().position(|r| r.variant == Variant::Sure);
    let mut out = vec![
        Predicate::new(
            "params_strictly_increasing",
            params.windows(2).all(|w| w[0] < w[1]),
            format!("no/sure/huge parameters {params:?}"),
        ),
        Predicate::new(
            "score_stats_table",
            analysis.score_stats.len() == runs.len(),
            format!("{} score-statistics columns", analysis.score_stats.len()),
        ),
        Predicate::new(
            "silhouette_positive",
            sil.is_some_and(|s| s > 0.0),
            format!("silhouette by variant {}", sil.map_or("NA".into(), |s| format!("{s:.4}"))),
        ),
    ];
    if let Some(reports) = saddle_control {
        out.push(Predicate::new(
            "sure_no_saddle",
            sure.is_some_and(|i| !reports[i].fired(FlagKind::SaddleSuspect)),
            "no saddle_suspect flag on the sure run".into(),
        ));
    }
    out
}

fn friedman_predicates(runs: &[RunSummary]) -> Vec<Predicate> {
    let r2 = runs
        .iter()
        .find(|r| r.variant == Variant::Sure)
        .and_then(|r| r.final_holdout.as_ref())
        .and_then(|m| m.r2);
    vec![Predicate::new(
        "sure_r2_at_least_0.8",
        r2.is_some_and(|v| v >= FRIEDMAN_MIN_R2),
        format!("held-out R2 {}", r2.map_or("NA".into(), |v| format!("{v:.4}"))),
    )]
}
