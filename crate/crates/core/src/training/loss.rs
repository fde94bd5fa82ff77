use serde::{Deserialize, Serialize};

use crate::datasets::Targets;
use crate::error::{dim_err, Error, Result};
use crate::network::Network;
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy on logits.
    CrossEntropy,
    /// Mean of squared errors over output components.
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cross_entropy" | "crossentropy" | "ce" => Ok(LossKind::CrossEntropy),
            "mse" => Ok(LossKind::Mse),
            _ => Err(Error::InvalidArgument(format!(
                "unknown loss '{s}' (valid: cross_entropy, mse)"
            ))),
        }
    }
}

/// Target of a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Class(usize),
    Values(&'a [f64]),
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Loss of one sample and its gradient with respect to the predictions.
pub fn loss_eval(kind: LossKind, predictions: &[f64], target: Target<'_>) -> Result<(f64, Vec<f64>)> {
    if predictions.is_empty() {
        return Err(dim_err!("empty prediction vector"));
    }
    match (kind, target) {
        (LossKind::CrossEntropy, Target::Class(c)) => {
            if c >= predictions.len() {
                return Err(Error::InvalidArgument(format!(
                    "class index {c} out of range for {} logits",
                    predictions.len()
                )));
            }
            let m = predictions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + predictions.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            let mut grad = softmax(predictions);
            grad[c] -= 1.0;
            Ok(((lse - predictions[c]).max(0.0), grad))
        }
        (LossKind::Mse, Target::Values(t)) => {
            if t.len() != predictions.len() {
                return Err(dim_err!(
                    "{} predictions vs {} targets",
                    predictions.len(),
                    t.len()
                ));
            }
            let m = t.len() as f64;
            let loss = predictions.iter().zip(t).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / m;
            let grad = predictions.iter().zip(t).map(|(p, y)| 2.0 * (p - y) / m).collect();
            Ok((loss, grad))
        }
        (LossKind::CrossEntropy, Target::Values(_)) => Err(Error::InvalidArgument(
            "cross-entropy needs class targets".into(),
        )),
        (LossKind::Mse, Target::Class(_)) => {
            Err(Error::InvalidArgument("MSE needs real-valued targets".into()))
        }
    }
}

/// Per-block parameter gradients in flattening order.
pub type Gradients = Vec<Vec<f64>>;

pub(crate) fn zero_gradients(net: &Network) -> Gradients {
    net.blocks().iter().map(|b| vec![0.0; b.param_count()]).collect()
}

/// Adds `weight * dL/dtheta` for one sample into `grads`; returns the sample loss.
pub(crate) fn accumulate(
    net: &Network,
    x: &[f64],
    target: Target<'_>,
    kind: LossKind,
    weight: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    let trace = net.forward(x)?;
    let (loss, mut delta) = loss_eval(kind, trace.output(), target)?;
    for (i, block) in net.blocks().iter().enumerate().rev() {
        let z = &trace.inputs[i];
        let (q, d) = (block.outputs(), block.inputs());
        let du: Vec<f64> = delta
            .iter()
            .zip(&trace.pre_activations[i])
            .map(|(g, &u)| g * block.activation.first(u))
            .collect();
        let g = &mut grads[i];
        for j in 0..q {
            let s = weight * du[j];
            if s != 0.0 {
                for (gk, zk) in g[j * d..(j + 1) * d].iter_mut().zip(z) {
                    *gk += s * zk;
                }
            }
            g[q * d + j] += s;
        }
        if i > 0 {
            let mut dz = vec![0.0; d];
            for (j, &dj) in du.iter().enumerate() {
                if dj != 0.0 {
                    for (a, w) in dz.iter_mut().zip(block.weights.row(j)) {
                        *a += w * dj;
                    }
                }
            }
            delta = dz;
        }
    }
    Ok(loss)
}

/// Loss of one sample and the gradient with respect to every block's parameters.
pub fn backprop(net: &Network, x: &[f64], target: Target<'_>, kind: LossKind) -> Result<(f64, Gradients)> {
    let mut grads = zero_gradients(net);
    let loss = accumulate(net, x, target, kind, 1.0, &mut grads)?;
    Ok((loss, grads))
}

pub(crate) fn sample_target(targets: &Targets, i: usize) -> Target<'_> {
    match targets {
        Targets::Classes(c) => Target::Class(c[i]),
        Targets::Values(v) => Target::Values(std::slice::from_ref(&v[i])),
    }
}

/// Mean loss over all rows of `x` and its gradient (full batch).
pub fn batch_backprop(
    net: &Network,
    x: &DenseMatrix,
    targets: &Targets,
    kind: LossKind,
) -> Result<(f64, Gradients)> {
    let n = x.rows();
    if n == 0 || targets.len() != n {
        return Err(dim_err!("{n} samples vs {} targets", targets.len()));
    }
    let mut grads = zero_gradients(net);
    let w = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        total += accumulate(net, x.row(i), sample_target(targets, i), kind, w, &mut grads)?;
    }
    Ok((total * w, grads))
}

/// Mean loss without gradients.
pub fn batch_loss(net: &Network, x: &DenseMatrix, targets: &Targets, kind: LossKind) -> Result<f64> {
    let n = x.rows();
    if n == 0 || targets.len() != n {
        return Err(dim_err!("{n} samples vs {} targets", targets.len()));
    }
    let mut total = 0.0;
    for i in 0..n {
        let out = net.predict(x.row(i))?;
        total += loss_eval(kind, &out, sample_target(targets, i))?.0;
    }
    Ok(total / n as f64)
}
