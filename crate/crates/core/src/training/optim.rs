use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    RmsProp { lr: f64, decay: f64, eps: f64 },
}

impl Optimizer {
    pub const SGD: Optimizer = Optimizer::Sgd { lr: 0.05 };
    pub const ADAM: Optimizer = Optimizer::Adam {
        lr: 0.001,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
    pub const RMSPROP: Optimizer = Optimizer::RmsProp {
        lr: 0.001,
        decay: 0.9,
        eps: 1e-8,
    };

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd { .. } => "sgd",
            Optimizer::Adam { .. } => "adam",
            Optimizer::RmsProp { .. } => "rmsprop",
        }
    }

    /// Optimizer with default hyperparameters.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::SGD),
            "adam" => Ok(Self::ADAM),
            "rmsprop" => Ok(Self::RMSPROP),
            _ => Err(Error::InvalidArgument(format!(
                "unknown optimizer '{s}' (valid: sgd, adam, rmsprop)"
            ))),
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr, .. } | Optimizer::RmsProp { lr, .. } => lr,
        }
    }

    pub fn with_lr(mut self, new: f64) -> Self {
        match &mut self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr, .. } | Optimizer::RmsProp { lr, .. } => {
                *lr = new
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Optimizer::Sgd { lr } => lr > 0.0,
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                lr > 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0
            }
            Optimizer::RmsProp { lr, decay, eps } => {
                lr > 0.0 && (0.0..1.0).contains(&decay) && eps > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid optimizer hyperparameters {self:?}")))
        }
    }
}

/// Moment buffers, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One in-place update of `params`.
pub fn optimizer_step(
    opt: &Optimizer,
    state: &mut OptimizerState,
    params: &mut [f64],
    grads: &[f64],
) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(dim_err!(
            "{} parameters, {} gradients, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        ));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.step += 1;
    match *opt {
        Optimizer::Sgd { lr } => {
            for (p, g) in params.iter_mut().zip(grads) {
                *p -= lr * g;
            }
        }
        Optimizer::Adam { lr, beta1, beta2, eps } => {
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for i in 0..params.len() {
                let g = grads[i];
                state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
                state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
                params[i] -= lr * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + eps);
            }
        }
        Optimizer::RmsProp { lr, decay, eps } => {
            for i in 0..params.len() {
                let g = grads[i];
                state.v[i] = decay * state.v[i] + (1.0 - decay) * g * g;
                params[i] -= lr * g / (state.v[i].sqrt() + eps);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_step() {
        let mut p = [1.0];
        let mut s = OptimizerState::new(1);
        optimizer_step(&Optimizer::Sgd { lr: 0.1 }, &mut s, &mut p, &[2.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr() {
        for g in [1e-3, 1.0, 250.0] {
            let mut p = [0.0];
            let mut s = OptimizerState::new(1);
            optimizer_step(&Optimizer::ADAM, &mut s, &mut p, &[g]).unwrap();
            assert!((p[0] + 0.001).abs() < 1e-8, "{g}: {}", p[0]);
        }
    }

    #[test]
    fn rmsprop_two_steps() {
        let opt = Optimizer::RmsProp { lr: 0.01, decay: 0.9, eps: 1e-8 };
        let mut p = [0.0];
        let mut s = OptimizerState::new(1);
        optimizer_step(&opt, &mut s, &mut p, &[2.0]).unwrap();
        optimizer_step(&opt, &mut s, &mut p, &[2.0]).unwrap();
        // v1 = 0.1 * 4 = 0.4, v2 = 0.9 * 0.4 + 0.4 = 0.76
        let expected = -0.01 * 2.0 / (0.4f64.sqrt() + 1e-8) - 0.01 * 2.0 / (0.76f64.sqrt() + 1e-8);
        assert!((s.v[0] - 0.76).abs() < 1e-15);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = [0.0];
        let mut s = OptimizerState::new(1);
        assert!(optimizer_step(&Optimizer::SGD, &mut s, &mut p, &[f64::NAN]).is_err());
    }
}
