//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 training
//! aborted, 4 data or schema failure.

mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::warn;

pub use config::{ConfigFile, KNOWN_KEYS};

use crate::analysis::{analyze_streams, diagnose, DiagnosticThresholds};
use crate::datasets::{generate, DatasetSpec, Generator};
use crate::error::Error;
use crate::experiments::{run_preset, stream_path, write_diagnostics, Preset, PresetName, PRESET_HESSIAN_STORE_CAP};
use crate::network::ActivationKind;
use crate::snapshot::{read_stream, validate, write_stream, Snapshot, ValidationReport};
use crate::training::{train_many, LossKind, MetricReport, Optimizer, TrainConfig, Variant};

/// Environment variable holding the default output directory.
pub const OUTDIR_ENV: &str = "LHESSIAN_OUTDIR";
pub const DEFAULT_OUTDIR: &str = "lhessian-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lhessian", version, about = "Layer-wise local Hessian toolkit")]
pub struct Cli {
    /// Master seed; every random component derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: $LHESSIAN_OUTDIR, else lhessian-out].
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    Generate {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Output file [default: <outdir>/<name>-n<n>-s<seed>.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train model variants and write one snapshot stream per variant.
    Train(TrainArgs),
    /// Correlation, CCA, score statistics and PCA over snapshot streams.
    Analyze {
        /// Snapshot stream files.
        #[arg(required = true)]
        streams: Vec<PathBuf>,
        /// File prefix for combined artifacts [default: analysis].
        #[arg(long)]
        prefix: Option<String>,
    },
    /// Rule-based diagnostics of one snapshot stream.
    Diagnose {
        stream: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Check snapshot streams against the schema.
    Validate {
        #[arg(required = true)]
        streams: Vec<PathBuf>,
    },
    /// Run a canned experiment and check its expected outcomes.
    Preset {
        /// saturation, variants_blobs, variants_moons or regression_friedman.
        name: String,
        /// Worker threads for independent runs.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Generator: moons, circles, blobs, classification, hastie, friedman1, friedman2, friedman3, linear_regression.
    #[arg(long)]
    pub name: Option<String>,
    /// Number of samples [default: 500].
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator noise (cluster std for blobs, label-flip fraction for classification).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Feature count for generators with a free dimension.
    #[arg(long)]
    pub features: Option<usize>,
    /// Class count for blobs and classification [default: 2].
    #[arg(long)]
    pub classes: Option<usize>,
    /// Inner/outer radius ratio for circles [default: 0.8].
    #[arg(long)]
    pub factor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Variants to train (no, sure, huge); repeat or comma-separate [default: all].
    #[arg(long = "variant", value_delimiter = ',')]
    pub variants: Vec<String>,
    /// Optimizer steps [default: 300].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Steps between snapshots [default: 20].
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// sgd, adam or rmsprop [default: adam].
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Learning rate [default: optimizer default].
    #[arg(long)]
    pub lr: Option<f64>,
    /// cross_entropy or mse [default: matched to the dataset task].
    #[arg(long)]
    pub loss: Option<String>,
    /// Hidden-layer activation: identity, relu, sigmoid, tanh [default: tanh].
    #[arg(long)]
    pub activation: Option<String>,
    /// Multiplier on the initial weight scale [default: 1].
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Largest layer whose dense Hessian is stored in snapshots [default: 256].
    #[arg(long)]
    pub hessian_store_cap: Option<usize>,
    /// Largest layer whose Hessian is formed densely [default: 2048].
    #[arg(long)]
    pub dense_hessian_cap: Option<usize>,
    /// Worker threads for independent variants [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Near-zero fraction above which late layers are flagged [default: 0.9].
    #[arg(long)]
    pub near_zero_fraction: Option<f64>,
    /// Largest |eigenvalue| below which early layers are flagged [default: 1e-3].
    #[arg(long)]
    pub low_expressivity_max_eigen: Option<f64>,
    /// Symmetry score above which a saddle is suspected [default: 0.9].
    #[arg(long)]
    pub saddle_symmetry: Option<f64>,
    /// Gradient infinity norm below which a saddle is suspected [default: 1e-3].
    #[arg(long)]
    pub saddle_gradient_norm: Option<f64>,
    /// Condition number above which a layer is flagged [default: 1e6].
    #[arg(long)]
    pub ill_conditioned: Option<f64>,
    /// Rank/parameter ratio below which a layer is flagged [default: 0.1].
    #[arg(long)]
    pub low_rank_ratio: Option<f64>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flag value, else config value, else `None`.
fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(cfg.get(key)?),
    }
}

struct Context {
    cfg: ConfigFile,
    seed: Option<u64>,
    outdir: PathBuf,
}

impl Context {
    fn new(cli: &Cli) -> CliResult<Self> {
        let cfg = match &cli.config {
            Some(p) => ConfigFile::load(p).map_err(|e| match e {
                Error::Io { .. } => CliError::usage(e.to_string()),
                other => other.into(),
            })?,
            None => ConfigFile::default(),
        };
        let seed = pick(cli.seed, &cfg, "seed")?;
        let outdir = match pick(cli.outdir.clone(), &cfg, "outdir")? {
            Some(p) => p,
            None => std::env::var_os(OUTDIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTDIR)),
        };
        Ok(Self { cfg, seed, outdir })
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn ensure_outdir(&self) -> CliResult<&Path> {
        fs::create_dir_all(&self.outdir).map_err(|e| Error::io(&self.outdir, e))?;
        Ok(&self.outdir)
    }

    fn dataset_spec(&self, a: &DatasetArgs) -> CliResult<DatasetSpec> {
        let name: String = pick(a.name.clone(), &self.cfg, "dataset.name")?
            .ok_or_else(|| CliError::usage("a dataset name is required (--name or dataset.name)"))?;
        let generator = Generator::parse(&name)?;
        let n = pick(a.n, &self.cfg, "dataset.n")?.unwrap_or(500);
        let mut spec = DatasetSpec::new(generator, n, self.seed());
        spec.noise = pick(a.noise, &self.cfg, "dataset.noise")?;
        spec.n_features = pick(a.features, &self.cfg, "dataset.features")?;
        if let Some(k) = pick(a.classes, &self.cfg, "dataset.classes")? {
            spec.n_classes = k;
        }
        if let Some(f) = pick(a.factor, &self.cfg, "dataset.factor")? {
            spec.factor = f;
        }
        Ok(spec)
    }

    fn train_configs(&self, a: &TrainArgs, spec: &DatasetSpec) -> CliResult<Vec<TrainConfig>> {
        let task = spec.generator.task();
        let variants: Vec<Variant> = if !a.variants.is_empty() {
            a.variants.iter().map(|v| Variant::parse(v.trim())).collect::<crate::Result<_>>()?
        } else if let Some(list) = self.cfg.raw("train.variants") {
            list.split(',').map(|v| Variant::parse(v.trim())).collect::<crate::Result<_>>()?
        } else {
            Variant::ALL.to_vec()
        };
        let mut seen = Vec::new();
        for v in &variants {
            if seen.contains(v) {
                return Err(CliError::usage(format!("variant {v} given twice")));
            }
            seen.push(*v);
        }
        let optimizer = match pick(a.optimizer.clone(), &self.cfg, "train.optimizer")? {
            Some(s) => Optimizer::parse(&s)?,
            None => Optimizer::ADAM,
        };
        let optimizer = match pick(a.lr, &self.cfg, "train.lr")? {
            Some(lr) => optimizer.with_lr(lr),
            None => optimizer,
        };
        let loss = pick(a.loss.clone(), &self.cfg, "train.loss")?
            .map(|s| LossKind::parse(&s))
            .transpose()?;
        let activation = match pick(a.activation.clone(), &self.cfg, "train.activation")? {
            Some(s) => Some(ActivationKind::parse(&s).ok_or_else(|| {
                CliError::usage(format!("unknown activation '{s}' (valid: identity, relu, sigmoid, tanh)"))
            })?),
            None => None,
        };
        let iterations = pick(a.iterations, &self.cfg, "train.iterations")?;
        let every = pick(a.checkpoint_every, &self.cfg, "train.checkpoint_every")?;
        let init_scale = pick(a.init_scale, &self.cfg, "train.init_scale")?;
        let store_cap = pick(a.hessian_store_cap, &self.cfg, "train.hessian_store_cap")?;
        let dense_cap = pick(a.dense_hessian_cap, &self.cfg, "train.dense_hessian_cap")?;

        variants
            .into_iter()
            .map(|v| {
                let mut c = TrainConfig::for_variant(v, task, self.seed());
                c.optimizer = optimizer;
                c.hessian_store_cap = store_cap.unwrap_or(PRESET_HESSIAN_STORE_CAP);
                if let Some(l) = loss {
                    c.loss = l;
                }
                if let Some(k) = activation {
                    let out = c.activations.len() - 1;
                    c.activations[..out].fill(k);
                }
                if let Some(i) = iterations {
                    c.iterations = i;
                }
                if let Some(e) = every {
                    c.checkpoint_every = e;
                }
                if let Some(s) = init_scale {
                    c.init_scale_multiplier = s;
                }
                if let Some(d) = dense_cap {
                    c.dense_hessian_cap = d;
                }
                c.validate(task)?;
                Ok(c)
            })
            .collect()
    }

    fn thresholds(&self, a: &ThresholdArgs) -> CliResult<DiagnosticThresholds> {
        let d = DiagnosticThresholds::default();
        let get = |flag: Option<f64>, key: &str, default: f64| -> CliResult<f64> {
            Ok(pick(flag, &self.cfg, key)?.unwrap_or(default))
        };
        Ok(DiagnosticThresholds {
            near_zero_fraction: get(a.near_zero_fraction, "diagnose.near_zero_fraction", d.near_zero_fraction)?,
            low_expressivity_max_eigen: get(
                a.low_expressivity_max_eigen,
                "diagnose.low_expressivity_max_eigen",
                d.low_expressivity_max_eigen,
            )?,
            saddle_symmetry: get(a.saddle_symmetry, "diagnose.saddle_symmetry", d.saddle_symmetry)?,
            saddle_gradient_norm: get(a.saddle_gradient_norm, "diagnose.saddle_gradient_norm", d.saddle_gradient_norm)?,
            ill_conditioned: get(a.ill_conditioned, "diagnose.ill_conditioned", d.ill_conditioned)?,
            low_rank_ratio: get(a.low_rank_ratio, "diagnose.low_rank_ratio", d.low_rank_ratio)?,
        })
    }

    fn jobs(&self, flag: Option<usize>) -> CliResult<usize> {
        let j = pick(flag, &self.cfg, "train.jobs")?.unwrap_or(1);
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        Ok(j)
    }
}

fn headline(m: &MetricReport) -> String {
    match (m.accuracy, m.r2) {
        (Some(a), _) => format!("accuracy {a:.4}"),
        (None, Some(r)) => format!("R2 {r:.4}"),
        _ => "-".into(),
    }
}

fn cmd_generate(ctx: &Context, dataset: &DatasetArgs, output: Option<&Path>) -> CliResult<()> {
    let spec = ctx.dataset_spec(dataset)?;
    let ds = generate(&spec)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => ctx
            .ensure_outdir()?
            .join(format!("{}-n{}-s{}.csv", ds.name, spec.n, spec.seed)),
    };
    ds.write_csv(&path)?;
    println!("{} {} rows", path.display(), ds.len());
    Ok(())
}

fn cmd_train(ctx: &Context, a: &TrainArgs) -> CliResult<()> {
    let spec = ctx.dataset_spec(&a.dataset)?;
    let configs = ctx.train_configs(a, &spec)?;
    let jobs = ctx.jobs(a.jobs)?;
    let ds = generate(&spec)?;
    let outdir = ctx.ensure_outdir()?;
    let runs = train_many(&configs, &ds, jobs);
    let mut aborted = Vec::new();
    println!("{:<28} {:>7} {:>12} {:>18} {:>18}", "run", "params", "train_loss", "train", "holdout");
    for run in runs {
        let run = run?;
        let path = stream_path(outdir, &run.run_id);
        write_stream(&run.snapshots, &path)?;
        match run.snapshots.last() {
            Some(last) => println!(
                "{:<28} {:>7} {:>12.6} {:>18} {:>18}",
                run.run_id,
                run.network.param_count(),
                last.scores.train_loss,
                headline(&last.scores),
                last.holdout_scores.as_ref().map_or("-".into(), headline)
            ),
            None => println!("{:<28} {:>7} (no snapshots)", run.run_id, run.network.param_count()),
        }
        eprintln!("wrote {}", path.display());
        if let Some(msg) = &run.aborted {
            aborted.push(format!("{}: {msg} (partial stream kept at {})", run.run_id, path.display()));
        }
    }
    if !aborted.is_empty() {
        return Err(CliError {
            code: EXIT_TRAINING,
            message: format!("training aborted\n{}", aborted.join("\n")),
        });
    }
    Ok(())
}

fn report_violations(path: &Path, report: &ValidationReport) {
    for v in &report.violations {
        eprintln!("{}: {v}", path.display());
    }
}

/// Validates then loads a stream; schema violations become exit code 4.
fn load_valid(path: &Path) -> CliResult<Vec<Snapshot>> {
    let report = validate(path)?;
    if !report.is_valid() {
        report_violations(path, &report);
        return Err(CliError::data(format!(
            "{}: {} schema violation(s)",
            path.display(),
            report.violations.len()
        )));
    }
    Ok(read_stream(path)?)
}

fn cmd_analyze(ctx: &Context, paths: &[PathBuf], prefix: Option<&str>) -> CliResult<()> {
    let mut streams = paths.iter().map(|p| load_valid(p)).collect::<CliResult<Vec<_>>>()?;
    if let Some(empty) = paths.iter().zip(&streams).find(|(_, s)| s.is_empty()) {
        return Err(CliError::data(format!("{}: stream holds no snapshots", empty.0.display())));
    }
    streams.sort_by(|a, b| (a[0].variant, &a[0].run_id).cmp(&(b[0].variant, &b[0].run_id)));
    let prefix = match prefix {
        Some(p) => p.to_string(),
        None => ctx.cfg.raw("analyze.prefix").unwrap_or("analysis").to_string(),
    };
    let out = analyze_streams(&streams, ctx.ensure_outdir()?, &prefix)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    for n in &out.summary.notices {
        eprintln!("notice: {n}");
    }
    Ok(())
}

fn cmd_diagnose(ctx: &Context, path: &Path, t: &ThresholdArgs) -> CliResult<()> {
    let thresholds = ctx.thresholds(t)?;
    let stream = load_valid(path)?;
    if stream.is_empty() {
        return Err(CliError::data(format!("{}: stream holds no snapshots", path.display())));
    }
    let report = diagnose(&stream, &thresholds)?;
    print!("{}", report.to_text());
    for f in write_diagnostics(&report, ctx.ensure_outdir()?)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_validate(paths: &[PathBuf]) -> CliResult<()> {
    let mut failed = 0;
    for p in paths {
        let report = validate(p)?;
        if report.is_valid() {
            println!("{}: valid ({} snapshots)", p.display(), report.snapshots);
        } else {
            println!("{}: {} violation(s)", p.display(), report.violations.len());
            for v in &report.violations {
                println!("  {v}");
            }
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::data(format!("{failed} invalid stream(s)")));
    }
    Ok(())
}

fn cmd_preset(ctx: &Context, name: &str, jobs: Option<usize>) -> CliResult<()> {
    let name = PresetName::parse(name)?;
    let preset = Preset::new(name, ctx.seed);
    let outdir = ctx.ensure_outdir()?.join(name.name());
    let outcome = run_preset(&preset, &outdir, ctx.jobs(jobs)?)?;
    print!("{}", outcome.to_text());
    if let Some(r) = outcome.runs.iter().find(|r| r.aborted.is_some()) {
        return Err(CliError {
            code: EXIT_TRAINING,
            message: format!("{}: {}", r.run_id, r.aborted.as_deref().unwrap_or("")),
        });
    }
    if !outcome.passed() {
        warn!("preset {name}: some expected outcomes did not hold");
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Generate { dataset, output } => cmd_generate(&ctx, dataset, output.as_deref()),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Analyze { streams, prefix } => cmd_analyze(&ctx, streams, prefix.as_deref()),
        Command::Diagnose { stream, thresholds } => cmd_diagnose(&ctx, stream, thresholds),
        Command::Validate { streams } => cmd_validate(streams),
        Command::Preset { name, jobs } => cmd_preset(&ctx, name, *jobs),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
