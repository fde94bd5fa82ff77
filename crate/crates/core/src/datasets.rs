//! Deterministic synthetic datasets.
//!
//! The generators follow the usual scikit-learn definitions (moons, circles,
//! blobs, a simplified `make_classification`, Hastie 10.2, the three Friedman
//! problems and a linear regression with known coefficients). Every dataset is
//! a pure function of its [`DatasetSpec`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rng::{derive_seed, Rng64};

/// Median of the chi-squared distribution with 10 degrees of freedom.
pub const CHI2_10_MEDIAN: f64 = 9.341_817_765_591_97;

const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Moons,
    Circles,
    Blobs,
    Classification,
    Hastie,
    Friedman1,
    Friedman2,
    Friedman3,
    LinearRegression,
}

impl Generator {
    pub const ALL: [Generator; 9] = [
        Generator::Moons,
        Generator::Circles,
        Generator::Blobs,
        Generator::Classification,
        Generator::Hastie,
        Generator::Friedman1,
        Generator::Friedman2,
        Generator::Friedman3,
        Generator::LinearRegression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Moons => "moons",
            Generator::Circles => "circles",
            Generator::Blobs => "blobs",
            Generator::Classification => "classification",
            Generator::Hastie => "hastie",
            Generator::Friedman1 => "friedman1",
            Generator::Friedman2 => "friedman2",
            Generator::Friedman3 => "friedman3",
            Generator::LinearRegression => "linear_regression",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|g| g.name()).collect();
            Error::InvalidArgument(format!(
                "unknown generator '{s}' (valid: {})",
                names.join(", ")
            ))
        })
    }

    pub fn task(self) -> Task {
        match self {
            Generator::Friedman1
            | Generator::Friedman2
            | Generator::Friedman3
            | Generator::LinearRegression => Task::Regression,
            _ => Task::Classification,
        }
    }

    /// Noise used when the spec leaves it unset.
    ///
    /// For blobs this is the cluster standard deviation; for `classification`
    /// it is the fraction of randomly reassigned labels.
    pub fn default_noise(self) -> f64 {
        match self {
            Generator::Moons => 0.1,
            Generator::Circles => 0.05,
            Generator::Blobs => 1.0,
            Generator::LinearRegression => 1.0,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Everything that determines a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub generator: Generator,
    pub n: usize,
    /// `None` selects [`Generator::default_noise`].
    pub noise: Option<f64>,
    /// Ignored by generators with a fixed dimension.
    pub n_features: Option<usize>,
    pub n_classes: usize,
    /// Inner/outer radius ratio for circles.
    pub factor: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(generator: Generator, n: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            noise: None,
            n_features: None,
            n_classes: 2,
            factor: 0.8,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_features(mut self, d: usize) -> Self {
        self.n_features = Some(d);
        self
    }

    pub fn with_classes(mut self, k: usize) -> Self {
        self.n_classes = k;
        self
    }

    pub fn noise(&self) -> f64 {
        self.noise.unwrap_or_else(|| self.generator.default_noise())
    }

    /// Feature dimension this spec produces.
    pub fn dim(&self) -> usize {
        match self.generator {
            Generator::Moons | Generator::Circles => 2,
            Generator::Hastie => 10,
            Generator::Friedman2 | Generator::Friedman3 => 4,
            Generator::Friedman1 => self.n_features.unwrap_or(10),
            Generator::Blobs => self.n_features.unwrap_or(2),
            Generator::Classification | Generator::LinearRegression => {
                self.n_features.unwrap_or(4)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n < MIN_SAMPLES {
            return bad(format!("need at least {MIN_SAMPLES} samples, got {}", self.n));
        }
        let noise = self.noise();
        if !(noise.is_finite() && noise >= 0.0) {
            return bad(format!("noise must be finite and >= 0, got {noise}"));
        }
        let d = self.dim();
        if d == 0 {
            return bad("n_features must be at least 1".into());
        }
        match self.generator {
            Generator::Friedman1 if d < 5 => bad(format!("friedman1 needs >= 5 features, got {d}")),
            Generator::Circles if !(self.factor > 0.0 && self.factor < 1.0) => {
                bad(format!("factor must lie in (0, 1), got {}", self.factor))
            }
            Generator::Blobs | Generator::Classification if self.n_classes < 2 => {
                bad(format!("n_classes must be >= 2, got {}", self.n_classes))
            }
            Generator::Classification if noise > 1.0 => {
                bad(format!("label-flip fraction must be <= 1, got {noise}"))
            }
            Generator::Classification if d < 64 && (1usize << d) < self.n_classes => bad(format!(
                "{} classes do not fit on the vertices of a {d}-cube",
                self.n_classes
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, idx: &[usize]) -> Self {
        match self {
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }

    fn display(&self, i: usize) -> String {
        match self {
            Targets::Classes(c) => c[i].to_string(),
            Targets::Values(v) => v[i].to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub task: Task,
    /// `samples x d`
    pub features: DenseMatrix,
    pub targets: Targets,
    /// Zero for regression.
    pub n_classes: usize,
    pub seed: u64,
    /// True coefficients for `linear_regression`.
    pub coefficients: Option<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.features.row(i));
        }
        Self {
            features: DenseMatrix::new(idx.len(), d, data).expect("rows of a finite matrix"),
            targets: self.targets.subset(idx),
            ..self.clone()
        }
    }

    /// CSV with header `f0..f{d-1},target`; floats use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 0..d {
            let _ = write!(out, "f{j},");
        }
        out.push_str("target\n");
        for i in 0..self.len() {
            for v in self.features.row(i) {
                let _ = write!(out, "{v},");
            }
            out.push_str(&self.targets.display(i));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Per-column affine map fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population std; zero marks a constant column, which maps to zero.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DenseMatrix) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        if n == 0 {
            return Err(Error::InvalidArgument("cannot standardize an empty dataset".into()));
        }
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        for j in 0..d {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
            if s == 0.0 {
                warn!("feature column {j} is constant; standardized to zero");
            }
            means.push(m);
            stds.push(s);
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.means.len() {
            return Err(crate::error::dim_err!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                x.cols()
            ));
        }
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                out[(i, j)] = if self.stds[j] == 0.0 {
                    0.0
                } else {
                    (x[(i, j)] - self.means[j]) / self.stds[j]
                };
            }
        }
        Ok(out)
    }
}

/// Zero mean and unit population std per feature column.
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let scaler = Standardizer::fit(&ds.features)?;
    Ok(Dataset {
        features: scaler.apply(&ds.features)?,
        ..ds.clone()
    })
}

/// Deterministic shuffled 80/20 train/test split.
pub fn train_test_split(ds: &Dataset, seed: u64) -> (Dataset, Dataset) {
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    Rng64::new(derive_seed(seed, "split")).shuffle(&mut idx);
    let n_train = (ds.len() * 4).div_ceil(5);
    (ds.subset(&idx[..n_train]), ds.subset(&idx[n_train..]))
}

/// `10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4`
pub fn friedman1_target(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// `sqrt(x0^2 + (x1 x2 - 1 / (x1 x3))^2)`
pub fn friedman2_target(x: &[f64]) -> f64 {
    (x[0].powi(2) + (x[1] * x[2] - 1.0 / (x[1] * x[3])).powi(2)).sqrt()
}

/// `atan((x1 x2 - 1 / (x1 x3)) / x0)`
pub fn friedman3_target(x: &[f64]) -> f64 {
    ((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]).atan()
}

struct Builder {
    d: usize,
    data: Vec<f64>,
    classes: Vec<usize>,
    values: Vec<f64>,
}

impl Builder {
    fn new(n: usize, d: usize) -> Self {
        Self {
            d,
            data: Vec::with_capacity(n * d),
            classes: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    fn push_class(&mut self, x: &[f64], y: usize) {
        self.data.extend_from_slice(x);
        self.classes.push(y);
    }

    fn push_value(&mut self, x: &[f64], y: f64) {
        self.data.extend_from_slice(x);
        self.values.push(y);
    }
}

fn moons(n: usize, noise: f64, rng: &mut Rng64, b: &mut Builder) {
    let n_out = n / 2;
    let n_in = n - n_out;
    let step = |k: usize, m: usize| if m > 1 { PI * k as f64 / (m - 1) as f64 } else { 0.0 };
    for k in 0..n_out {
        let t = step(k, n_out);
        let x = [t.cos() + noise * rng.normal(), t.sin() + noise * rng.normal()];
        b.push_class(&x, 0);
    }
    for k in 0..n_in {
        let t = step(k, n_in);
        let x = [
            1.0 - t.cos() + noise * rng.normal(),
            0.5 - t.sin() + noise * rng.normal(),
        ];
        b.push_class(&x, 1);
    }
}

fn circles(n: usize, noise: f64, factor: f64, rng: &mut Rng64, b: &mut Builder) {
    let n_out = n / 2;
    let n_in = n - n_out;
    for (count, radius, label) in [(n_out, 1.0, 0), (n_in, factor, 1)] {
        for k in 0..count {
            let t = 2.0 * PI * k as f64 / count as f64;
            let x = [
                radius * t.cos() + noise * rng.normal(),
                radius * t.sin() + noise * rng.normal(),
            ];
            b.push_class(&x, label);
        }
    }
}

fn blobs(spec: &DatasetSpec, rng: &mut Rng64, b: &mut Builder) {
    let (d, k, std) = (b.d, spec.n_classes, spec.noise());
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.uniform(-10.0, 10.0)).collect())
        .collect();
    for (c, center) in centers.iter().enumerate() {
        let count = spec.n / k + usize::from(c < spec.n % k);
        for _ in 0..count {
            let x: Vec<f64> = center.iter().map(|m| m + std * rng.normal()).collect();
            b.push_class(&x, c);
        }
    }
}

/// One Gaussian cluster per class, centred on distinct hypercube vertices at
/// distance 1 from the origin along each axis, with a random linear mixing.
fn classification(spec: &DatasetSpec, rng: &mut Rng64, b: &mut Builder) {
    let (d, k) = (b.d, spec.n_classes);
    let mut vertices: Vec<u64> = Vec::with_capacity(k);
    while vertices.len() < k {
        let v = if d >= 64 { rng.next_u64() } else { rng.next_u64() & ((1u64 << d) - 1) };
        if !vertices.contains(&v) {
            vertices.push(v);
        }
    }
    for (c, &v) in vertices.iter().enumerate() {
        let centroid: Vec<f64> = (0..d)
            .map(|j| if (v >> (j % 64)) & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mixing: Vec<f64> = (0..d * d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let count = spec.n / k + usize::from(c < spec.n % k);
        for _ in 0..count {
            let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let x: Vec<f64> = (0..d)
                .map(|j| centroid[j] + (0..d).map(|i| z[i] * mixing[i * d + j]).sum::<f64>())
                .collect();
            b.push_class(&x, c);
        }
    }
    let flip = spec.noise();
    if flip > 0.0 {
        for y in b.classes.iter_mut() {
            if rng.next_f64() < flip {
                *y = rng.below(k);
            }
        }
    }
}

fn hastie(n: usize, rng: &mut Rng64, b: &mut Builder) {
    for _ in 0..n {
        let x: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        b.push_class(&x, usize::from(r2 > CHI2_10_MEDIAN));
    }
}

fn friedman(spec: &DatasetSpec, rng: &mut Rng64, b: &mut Builder) {
    let noise = spec.noise();
    for _ in 0..spec.n {
        let x: Vec<f64> = match spec.generator {
            Generator::Friedman1 => (0..b.d).map(|_| rng.next_f64()).collect(),
            _ => vec![
                rng.uniform(0.0, 100.0),
                rng.uniform(40.0 * PI, 560.0 * PI),
                rng.next_f64(),
                rng.uniform(1.0, 11.0),
            ],
        };
        let y = match spec.generator {
            Generator::Friedman1 => friedman1_target(&x),
            Generator::Friedman2 => friedman2_target(&x),
            _ => friedman3_target(&x),
        };
        b.push_value(&x, y + noise * rng.normal());
    }
}

fn linear_regression(spec: &DatasetSpec, rng: &mut Rng64, b: &mut Builder) -> Vec<f64> {
    let w: Vec<f64> = (0..b.d).map(|_| rng.uniform(-10.0, 10.0)).collect();
    let noise = spec.noise();
    for _ in 0..spec.n {
        let x: Vec<f64> = (0..b.d).map(|_| rng.normal()).collect();
        let y: f64 = x.iter().zip(&w).map(|(a, c)| a * c).sum();
        b.push_value(&x, y + noise * rng.normal());
    }
    w
}

/// Generates the dataset described by `spec`; rows are shuffled.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.dim();
    let mut rng = Rng64::new(derive_seed(spec.seed, spec.generator.name()));
    let mut b = Builder::new(spec.n, d);
    let mut coefficients = None;
    match spec.generator {
        Generator::Moons => moons(spec.n, spec.noise(), &mut rng, &mut b),
        Generator::Circles => circles(spec.n, spec.noise(), spec.factor, &mut rng, &mut b),
        Generator::Blobs => blobs(spec, &mut rng, &mut b),
        Generator::Classification => classification(spec, &mut rng, &mut b),
        Generator::Hastie => hastie(spec.n, &mut rng, &mut b),
        Generator::Friedman1 | Generator::Friedman2 | Generator::Friedman3 => {
            friedman(spec, &mut rng, &mut b)
        }
        Generator::LinearRegression => coefficients = Some(linear_regression(spec, &mut rng, &mut b)),
    }
    let task = spec.generator.task();
    let (targets, n_classes) = match task {
        Task::Classification => {
            let k = match spec.generator {
                Generator::Blobs | Generator::Classification => spec.n_classes,
                _ => 2,
            };
            (Targets::Classes(b.classes), k)
        }
        Task::Regression => (Targets::Values(b.values), 0),
    };
    let unshuffled = Dataset {
        name: spec.generator.name().to_string(),
        task,
        features: DenseMatrix::new(spec.n, d, b.data)?,
        targets,
        n_classes,
        seed: spec.seed,
        coefficients,
    };
    let mut order: Vec<usize> = (0..spec.n).collect();
    rng.shuffle(&mut order);
    Ok(unshuffled.subset(&order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(ds: &Dataset) -> &[usize] {
        match &ds.targets {
            Targets::Classes(c) => c,
            Targets::Values(_) => panic!("expected classes"),
        }
    }

    #[test]
    fn friedman1_formula() {
        let x = [0.5, 1.0, 0.5, 0.0, 0.0, 0.3, 0.9, 0.1, 0.2, 0.7];
        assert!((friedman1_target(&x) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn friedman1_noise_free_matches_formula() {
        let ds = generate(&DatasetSpec::new(Generator::Friedman1, 64, 3).with_noise(0.0)).unwrap();
        let Targets::Values(y) = &ds.targets else { panic!() };
        for i in 0..ds.len() {
            assert_eq!(y[i], friedman1_target(ds.features.row(i)));
        }
    }

    #[test]
    fn deterministic() {
        for g in Generator::ALL {
            let spec = DatasetSpec::new(g, 40, 11);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap(), "{g}");
            assert_eq!(generate(&spec).unwrap().to_csv(), generate(&spec).unwrap().to_csv());
        }
    }

    #[test]
    fn class_balance() {
        for g in [Generator::Moons, Generator::Circles] {
            let ds = generate(&DatasetSpec::new(g, 101, 5)).unwrap();
            let ones = classes(&ds).iter().filter(|&&c| c == 1).count();
            assert!(ones == 50 || ones == 51);
        }
    }

    #[test]
    fn hastie_labels_binary() {
        let ds = generate(&DatasetSpec::new(Generator::Hastie, 200, 1)).unwrap();
        assert_eq!(ds.dim(), 10);
        assert!(classes(&ds).iter().all(|&c| c < 2));
        let ones = classes(&ds).iter().filter(|&&c| c == 1).count();
        assert!((60..140).contains(&ones));
    }

    #[test]
    fn linear_regression_known_weights() {
        let ds = generate(&DatasetSpec::new(Generator::LinearRegression, 30, 2).with_noise(0.0))
            .unwrap();
        let w = ds.coefficients.clone().unwrap();
        let Targets::Values(y) = &ds.targets else { panic!() };
        for i in 0..ds.len() {
            let pred: f64 = ds.features.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!((pred - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(Generator::parse("spirals").is_err());
        assert!(generate(&DatasetSpec::new(Generator::Moons, 4, 0)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Moons, 20, 0).with_noise(-1.0)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Blobs, 20, 0).with_classes(1)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Friedman1, 20, 0).with_features(3)).is_err());
    }

    #[test]
    fn standardize_column() {
        let ds = Dataset {
            name: "t".into(),
            task: Task::Regression,
            features: DenseMatrix::from_rows(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap(),
            targets: Targets::Values(vec![0.0, 1.0]),
            n_classes: 0,
            seed: 0,
            coefficients: None,
        };
        let s = standardize(&ds).unwrap();
        assert_eq!(s.features.column(0), vec![-1.0, 1.0]);
        assert_eq!(s.features.column(1), vec![0.0, 0.0]);
    }

    #[test]
    fn split_sizes() {
        let ds = generate(&DatasetSpec::new(Generator::Blobs, 101, 9)).unwrap();
        let (tr, te) = train_test_split(&ds, 9);
        assert_eq!((tr.len(), te.len()), (81, 20));
    }

    #[test]
    fn csv_header() {
        let ds = generate(&DatasetSpec::new(Generator::Moons, 8, 0)).unwrap();
        let csv = ds.to_csv();
        assert!(csv.starts_with("f0,f1,target\n"));
        assert_eq!(csv.lines().count(), 9);
    }
}
