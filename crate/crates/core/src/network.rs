//! Feed-forward networks as compositions of functional blocks.
//!
//! A block is an affine map `u = W z + b` followed by an elementwise
//! activation. Its parameters are flattened as all weights in row-major
//! order followed by all biases; Hessian rows, snapshot arrays and analysis
//! features all index parameters through this order.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::DenseMatrix;
use crate::rng::Rng64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Identity,
        ActivationKind::Relu,
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s.to_ascii_lowercase())
    }

    /// `A(u)`.
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            ActivationKind::Identity => u,
            ActivationKind::Relu => u.max(0.0),
            ActivationKind::Sigmoid => sigmoid(u),
            ActivationKind::Tanh => u.tanh(),
        }
    }

    /// `A'(u)`; ReLU uses `A'(0) = 0`.
    #[inline]
    pub fn first(self, u: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Relu => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(u);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = u.tanh();
                1.0 - t * t
            }
        }
    }

    /// `A''(u)`; zero for Identity and ReLU.
    #[inline]
    pub fn second(self, u: f64) -> f64 {
        match self {
            ActivationKind::Identity | ActivationKind::Relu => 0.0,
            ActivationKind::Sigmoid => {
                let s = sigmoid(u);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            ActivationKind::Tanh => {
                let t = u.tanh();
                -2.0 * t * (1.0 - t * t)
            }
        }
    }

    /// Whether `A''` vanishes identically on this kind's smooth pieces.
    pub fn is_piecewise_linear(self) -> bool {
        matches!(self, ActivationKind::Identity | ActivationKind::Relu)
    }
}

#[inline]
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    Value,
    First,
    Second,
}

/// Elementwise `A`, `A'` or `A''` over `u`.
pub fn activation_eval(kind: ActivationKind, u: &[f64], order: DerivativeOrder) -> Vec<f64> {
    let f = match order {
        DerivativeOrder::Value => ActivationKind::value,
        DerivativeOrder::First => ActivationKind::first,
        DerivativeOrder::Second => ActivationKind::second,
    };
    u.iter().map(|&x| f(kind, x)).collect()
}

/// One layer `y = A(W z + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalBlock {
    /// `q x d`
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
    pub layer_index: usize,
}

impl FunctionalBlock {
    pub fn new(
        weights: DenseMatrix,
        bias: Vec<f64>,
        activation: ActivationKind,
        layer_index: usize,
    ) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(dim_err!(
                "bias length {} does not match {} output units",
                bias.len(),
                weights.rows()
            ));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("bias".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
            layer_index,
        })
    }

    /// Output width `q`.
    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    /// Input width `d`.
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    /// `p = q d + q`.
    pub fn param_count(&self) -> usize {
        self.outputs() * self.inputs() + self.outputs()
    }

    /// Parameters in flattening order (weights row-major, then biases).
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(self.weights.data());
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(dim_err!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            ));
        }
        let nw = self.outputs() * self.inputs();
        self.weights.data_mut().copy_from_slice(&params[..nw]);
        self.bias.copy_from_slice(&params[nw..]);
        Ok(())
    }

    /// Block with the same shape and activation but different parameters.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut b = self.clone();
        b.set_params(params)?;
        Ok(b)
    }

    pub(crate) fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.inputs() {
            return Err(dim_err!(
                "layer {} expects input width {}, got {}",
                self.layer_index,
                self.inputs(),
                z.len()
            ));
        }
        Ok(())
    }

    /// Pre-activation `u = W z + b`.
    pub fn pre_activation(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_input(z)?;
        let mut u = self.weights.matvec(z)?;
        for (ui, bi) in u.iter_mut().zip(&self.bias) {
            *ui += bi;
        }
        Ok(u)
    }

    pub fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        let u = self.pre_activation(z)?;
        Ok(activation_eval(self.activation, &u, DerivativeOrder::Value))
    }
}

/// Sum aggregation of the block output at a fixed input: `S(theta) = sum_j A(W z + b)_j`.
pub fn scalar_function(block: &FunctionalBlock, z: &[f64]) -> Result<f64> {
    Ok(block.forward(z)?.iter().sum())
}

/// Gradient of [`scalar_function`] with respect to the block's own parameters.
///
/// Entry for `W[j][k]` is `A'(u_j) z_k`; entry for `b_j` is `A'(u_j)`.
pub fn block_gradient(block: &FunctionalBlock, z: &[f64]) -> Result<Vec<f64>> {
    let u = block.pre_activation(z)?;
    let (q, d) = (block.outputs(), block.inputs());
    let mut g = vec![0.0; block.param_count()];
    for j in 0..q {
        let a1 = block.activation.first(u[j]);
        for k in 0..d {
            g[j * d + k] = a1 * z[k];
        }
        g[q * d + j] = a1;
    }
    Ok(g)
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `z_i`: input reaching block `i`.
    pub inputs: Vec<Vec<f64>>,
    /// `u_i = W_i z_i + b_i`.
    pub pre_activations: Vec<Vec<f64>>,
    /// `y_i = A_i(u_i)`.
    pub outputs: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    blocks: Vec<FunctionalBlock>,
}

impl Network {
    pub fn new(mut blocks: Vec<FunctionalBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one block".into()));
        }
        for pair in blocks.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(dim_err!(
                    "block {} outputs {} but block {} expects {}",
                    pair[0].layer_index,
                    pair[0].outputs(),
                    pair[1].layer_index,
                    pair[1].inputs()
                ));
            }
        }
        for (i, b) in blocks.iter_mut().enumerate() {
            b.layer_index = i;
        }
        Ok(Self { blocks })
    }

    /// Fan-based uniform initialization: `W ~ U[-a, a]`, `a = scale * sqrt(6 / (d + q))`, `b = 0`.
    ///
    /// `widths` lists every layer width including input and output;
    /// `activations` has one entry per block.
    pub fn init(
        widths: &[usize],
        activations: &[ActivationKind],
        scale: f64,
        rng: &mut Rng64,
    ) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} widths need {} activations, got {}",
                widths.len(),
                widths.len().saturating_sub(1),
                activations.len()
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "init scale must be positive, got {scale}"
            )));
        }
        let blocks = widths
            .windows(2)
            .zip(activations)
            .enumerate()
            .map(|(i, (w, &act))| {
                let (d, q) = (w[0], w[1]);
                let a = scale * (6.0 / (d + q) as f64).sqrt();
                let data = (0..q * d).map(|_| rng.uniform(-a, a)).collect();
                FunctionalBlock::new(DenseMatrix::new(q, d, data)?, vec![0.0; q], act, i)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[FunctionalBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [FunctionalBlock] {
        &mut self.blocks
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.blocks[self.blocks.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(FunctionalBlock::param_count).sum()
    }

    /// Layer widths, input first.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.blocks.iter().map(FunctionalBlock::outputs))
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(dim_err!(
                "network expects input width {}, got {}",
                self.input_dim(),
                x.len()
            ));
        }
        let n = self.blocks.len();
        let mut trace = ForwardTrace {
            inputs: Vec::with_capacity(n),
            pre_activations: Vec::with_capacity(n),
            outputs: Vec::with_capacity(n),
        };
        let mut z = x.to_vec();
        for block in &self.blocks {
            let u = block.pre_activation(&z)?;
            let y = activation_eval(block.activation, &u, DerivativeOrder::Value);
            trace.inputs.push(z);
            trace.pre_activations.push(u);
            z = y.clone();
            trace.outputs.push(y);
        }
        Ok(trace)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = x.to_vec();
        if z.len() != self.input_dim() {
            return Err(dim_err!(
                "network expects input width {}, got {}",
                self.input_dim(),
                z.len()
            ));
        }
        for block in &self.blocks {
            z = block.forward(&z)?;
        }
        Ok(z)
    }
}
