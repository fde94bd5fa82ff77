//! Full-batch training with a fixed checkpoint schedule.
//!
//! [`train`] splits and standardizes the dataset, initializes a network for
//! the requested [`Variant`], and at every checkpoint records a
//! [`Snapshot`](crate::snapshot::Snapshot) of weights, gradients, local
//! Hessians at a fixed probe input, and training-split metrics.

mod loss;
mod metrics;
mod optim;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::datasets::{train_test_split, Dataset, Standardizer, Targets, Task};
use crate::error::{Error, Result};
use crate::network::{ActivationKind, Network};
use crate::numerics::DenseMatrix;
use crate::rng::{derive_seed, Rng64};
use crate::snapshot::{capture, layer_hessians, Snapshot, SnapshotMeta};

pub use loss::{
    backprop, batch_backprop, batch_loss, loss_eval, softmax, Gradients, LossKind, Target,
};
pub use metrics::{binary_auc, classification_metrics, regression_metrics, MetricReport};
pub use optim::{optimizer_step, Optimizer, OptimizerState};

/// Largest layer whose Hessian is built as a dense `p x p` matrix; larger
/// layers are analysed through their per-unit diagonal blocks.
pub const DEFAULT_DENSE_HESSIAN_CAP: usize = 2048;
/// Largest layer whose raw Hessian is written into snapshots.
pub const DEFAULT_HESSIAN_STORE_CAP: usize = 2048;

/// Parameterization scale of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    No,
    Sure,
    Huge,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::No, Variant::Sure, Variant::Huge];

    pub fn name(self) -> &'static str {
        match self {
            Variant::No => "no",
            Variant::Sure => "sure",
            Variant::Huge => "huge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant '{s}' (valid: no, sure, huge)")))
    }

    pub fn hidden_widths(self) -> Vec<usize> {
        match self {
            Variant::No => vec![4],
            Variant::Sure => vec![32, 16],
            Variant::Huge => vec![256, 128, 64],
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub hidden: Vec<usize>,
    /// One per block (hidden layers, then the output layer).
    pub activations: Vec<ActivationKind>,
    pub optimizer: Optimizer,
    pub loss: LossKind,
    pub iterations: usize,
    pub checkpoint_every: usize,
    pub seed: u64,
    pub init_scale_multiplier: f64,
    pub hessian_store_cap: usize,
    pub dense_hessian_cap: usize,
    /// Extra run-id component distinguishing runs of the same variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl TrainConfig {
    /// Tanh hidden layers, identity output, Adam, loss matched to the task.
    pub fn for_variant(variant: Variant, task: Task, seed: u64) -> Self {
        let hidden = variant.hidden_widths();
        let mut activations = vec![ActivationKind::Tanh; hidden.len()];
        activations.push(ActivationKind::Identity);
        Self {
            variant,
            hidden,
            activations,
            optimizer: Optimizer::ADAM,
            loss: match task {
                Task::Classification => LossKind::CrossEntropy,
                Task::Regression => LossKind::Mse,
            },
            iterations: 300,
            checkpoint_every: 20,
            seed,
            init_scale_multiplier: 1.0,
            hessian_store_cap: DEFAULT_HESSIAN_STORE_CAP,
            dense_hessian_cap: DEFAULT_DENSE_HESSIAN_CAP,
            tag: None,
        }
    }

    pub fn with_activation(mut self, kind: ActivationKind) -> Self {
        self.activations = vec![kind; self.hidden.len() + 1];
        self
    }

    pub fn validate(&self, task: Task) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.iterations == 0 || self.checkpoint_every == 0 {
            return bad("iterations and checkpoint_every must be >= 1".into());
        }
        if self.activations.len() != self.hidden.len() + 1 {
            return bad(format!(
                "{} hidden layers need {} activations, got {}",
                self.hidden.len(),
                self.hidden.len() + 1,
                self.activations.len()
            ));
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be >= 1".into());
        }
        if !(self.init_scale_multiplier > 0.0 && self.init_scale_multiplier.is_finite()) {
            return bad(format!("init_scale_multiplier must be > 0, got {}", self.init_scale_multiplier));
        }
        let expected = match task {
            Task::Classification => LossKind::CrossEntropy,
            Task::Regression => LossKind::Mse,
        };
        if self.loss != expected {
            return bad(format!(
                "loss {} does not fit a {task:?} dataset (use {})",
                self.loss.name(),
                expected.name()
            ));
        }
        self.optimizer.validate()
    }

    /// Every layer width, input and output included.
    pub fn widths(&self, input: usize, output: usize) -> Vec<usize> {
        std::iter::once(input)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect()
    }
}

/// Checkpoint iterations: 0, every multiple of `every` up to `iterations`, and `iterations` itself.
pub fn checkpoint_schedule(iterations: usize, every: usize) -> Vec<usize> {
    let every = every.max(1);
    let mut s: Vec<usize> = (0..=iterations).step_by(every).collect();
    if s.last() != Some(&iterations) {
        s.push(iterations);
    }
    s
}

/// Output width of the network for a dataset.
pub fn output_width(ds: &Dataset) -> usize {
    match ds.task {
        Task::Classification => ds.n_classes.max(2),
        Task::Regression => 1,
    }
}

/// `<dataset>-<variant>-s<seed>`, or `<dataset>-<variant>-<tag>-s<seed>` when tagged.
pub fn run_id(dataset: &str, variant: Variant, tag: Option<&str>, seed: u64) -> String {
    match tag {
        Some(t) => format!("{dataset}-{variant}-{t}-s{seed}"),
        None => format!("{dataset}-{variant}-s{seed}"),
    }
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub run_id: String,
    pub config: TrainConfig,
    pub snapshots: Vec<Snapshot>,
    pub network: Network,
    /// Set when training stopped early; `snapshots` then holds what was captured.
    pub aborted: Option<String>,
}

impl TrainRun {
    pub fn final_scores(&self) -> Option<&MetricReport> {
        self.snapshots.last().map(|s| &s.scores)
    }
}

struct Prepared {
    x_train: DenseMatrix,
    y_train: Targets,
    x_test: DenseMatrix,
    y_test: Targets,
    /// Regression targets are trained in standardized units.
    target_shift: (f64, f64),
    raw_train: Targets,
    raw_test: Targets,
}

fn prepare(ds: &Dataset, seed: u64) -> Result<Prepared> {
    let (train, test) = train_test_split(ds, seed);
    let scaler = Standardizer::fit(&train.features)?;
    let x_train = scaler.apply(&train.features)?;
    let x_test = scaler.apply(&test.features)?;
    let (y_train, y_test, target_shift) = match (&train.targets, &test.targets) {
        (Targets::Values(tr), Targets::Values(te)) => {
            let n = tr.len() as f64;
            let m = tr.iter().sum::<f64>() / n;
            let s = (tr.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if s == 0.0 {
                return Err(Error::Degenerate("constant regression targets".into()));
            }
            let scale = |v: &[f64]| Targets::Values(v.iter().map(|y| (y - m) / s).collect());
            (scale(tr), scale(te), (m, s))
        }
        _ => (train.targets.clone(), test.targets.clone(), (0.0, 1.0)),
    };
    Ok(Prepared {
        x_train,
        y_train,
        x_test,
        y_test,
        target_shift,
        raw_train: train.targets,
        raw_test: test.targets,
    })
}

/// Metrics of `net` on `x` against unscaled targets.
fn evaluate(net: &Network, x: &DenseMatrix, raw: &Targets, shift: (f64, f64)) -> Result<MetricReport> {
    let outputs: Vec<Vec<f64>> = (0..x.rows()).map(|i| net.predict(x.row(i))).collect::<Result<_>>()?;
    match raw {
        Targets::Classes(c) => {
            let k = net.output_dim();
            let data = outputs.iter().flat_map(|o| softmax(o)).collect();
            classification_metrics(c, &DenseMatrix::new(x.rows(), k, data)?)
        }
        Targets::Values(v) => {
            let preds: Vec<f64> = outputs.iter().map(|o| o[0] * shift.1 + shift.0).collect();
            regression_metrics(v, &preds)
        }
    }
}

/// Trains one model and captures a snapshot at every scheduled checkpoint.
///
/// A non-finite loss or gradient stops training; the run is then returned
/// with `aborted` set and the snapshots captured so far.
pub fn train(config: &TrainConfig, ds: &Dataset) -> Result<TrainRun> {
    config.validate(ds.task)?;
    let data = prepare(ds, config.seed)?;
    if data.x_train.rows() == 0 || data.x_test.rows() == 0 {
        return Err(Error::InvalidArgument("dataset too small to split".into()));
    }
    let widths = config.widths(ds.dim(), output_width(ds));
    let mut rng = Rng64::new(derive_seed(config.seed, "init"));
    let mut net = Network::init(&widths, &config.activations, config.init_scale_multiplier, &mut rng)?;
    let run_id = run_id(&ds.name, config.variant, config.tag.as_deref(), config.seed);
    let probe = data.x_train.row(0).to_vec();
    let schedule = checkpoint_schedule(config.iterations, config.checkpoint_every);
    let mut states: Vec<OptimizerState> =
        net.blocks().iter().map(|b| OptimizerState::new(b.param_count())).collect();
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut next = 0;
    let mut aborted = None;

    for t in 0..=config.iterations {
        let (loss, grads) = batch_backprop(&net, &data.x_train, &data.y_train, config.loss)?;
        if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
            let msg = format!("non-finite loss or gradient at iteration {t}");
            warn!("{run_id}: {msg}");
            aborted = Some(msg);
            break;
        }
        if next < schedule.len() && schedule[next] == t {
            let mut scores = evaluate(&net, &data.x_train, &data.raw_train, data.target_shift)?;
            scores.train_loss = loss;
            let mut holdout = evaluate(&net, &data.x_test, &data.raw_test, data.target_shift)?;
            holdout.train_loss = batch_loss(&net, &data.x_test, &data.y_test, config.loss)?;
            let hessians = layer_hessians(&net, &probe, config.dense_hessian_cap)?;
            let meta = SnapshotMeta {
                run_id: run_id.clone(),
                variant: config.variant,
                dataset: ds.name.clone(),
                iteration: t,
            };
            let mut snap = capture(&net, &grads, &hessians, scores, meta, config.hessian_store_cap)?;
            snap.holdout_scores = Some(holdout);
            debug!("{run_id}: checkpoint {t}, loss {loss:.6}");
            snapshots.push(snap);
            next += 1;
        }
        if t < config.iterations {
            for ((block, state), g) in net.blocks_mut().iter_mut().zip(&mut states).zip(&grads) {
                let mut p = block.params();
                optimizer_step(&config.optimizer, state, &mut p, g)?;
                block.set_params(&p)?;
            }
        }
    }
    Ok(TrainRun {
        run_id,
        config: config.clone(),
        snapshots,
        network: net,
        aborted,
    })
}

/// Trains several configurations on `jobs` worker threads.
///
/// Results come back in input order, so output never depends on `jobs`.
pub fn train_many(configs: &[TrainConfig], ds: &Dataset, jobs: usize) -> Vec<Result<TrainRun>> {
    let jobs = jobs.clamp(1, configs.len().max(1));
    if jobs == 1 {
        return configs.iter().map(|c| train(c, ds)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<TrainRun>>>> =
        configs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let r = train(&configs[i], ds);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("result slot").expect("every config trained"))
        .collect()
}
