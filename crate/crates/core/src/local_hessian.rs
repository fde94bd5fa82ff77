//! Local Hessians of each block's scalar function with respect to that block's parameters.
//!
//! Three independent routes are provided:
//!
//! * [`hessian_rowwise`]: row `j` is the derivative of the `j`-th gradient
//!   component, obtained by pushing a dual-number tangent `e_j` through the
//!   reverse-mode gradient of the block (forward-over-reverse). Rows whose
//!   gradient component is structurally constant in the parameters are left
//!   at zero without differentiation.
//! * [`hessian_closed_form`]: the analytic expression
//!   `d2S/dW_jk dW_jl = A''(u_j) z_k z_l`, `d2S/dW_jk db_j = A''(u_j) z_k`,
//!   `d2S/db_j^2 = A''(u_j)`, zero across different output units.
//! * [`hessian_fd`]: central second differences of the scalar function.
//!
//! Since `u_j` depends only on row `j` of `W` and on `b_j`, every local
//! Hessian is block diagonal with one `(d + 1) x (d + 1)` block per output
//! unit. [`neuron_blocks_rowwise`] exposes that structure so layers too large
//! for a dense `p x p` matrix can still be analysed.

use crate::error::{Error, Result};
use crate::network::{ActivationKind, FunctionalBlock, Network};
use crate::numerics::{sym_eigenvalues, DenseMatrix};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalHessian {
    pub layer_index: usize,
    /// `p x p` in the block's parameter flattening order.
    pub matrix: DenseMatrix,
}

impl LocalHessian {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// First-order dual number `v + d * eps`.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn constant(v: f64) -> Self {
        Self { v, d: 0.0 }
    }

    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }

    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }

    fn tanh(self) -> Dual {
        let t = self.v.tanh();
        Dual {
            v: t,
            d: (1.0 - t * t) * self.d,
        }
    }

    fn sigmoid(self) -> Dual {
        let s = ActivationKind::Sigmoid.value(self.v);
        Dual {
            v: s,
            d: s * (1.0 - s) * self.d,
        }
    }
}

/// `A'(u)` evaluated on a dual pre-activation, built from the activation's
/// first-derivative expression so the tangent is its derivative.
fn activation_first_dual(kind: ActivationKind, u: Dual) -> Dual {
    let one = Dual::constant(1.0);
    match kind {
        ActivationKind::Identity => one,
        ActivationKind::Relu => Dual::constant(kind.first(u.v)),
        ActivationKind::Sigmoid => {
            let s = u.sigmoid();
            s.mul(one.sub(s))
        }
        ActivationKind::Tanh => {
            let t = u.tanh();
            one.sub(t.mul(t))
        }
    }
}

/// Which output unit and local slot a flattened coordinate belongs to.
/// Local slots `0..d` are that unit's weights, slot `d` its bias.
#[inline]
fn owner(coord: usize, q: usize, d: usize) -> (usize, usize) {
    if coord < q * d {
        (coord / d, coord % d)
    } else {
        (coord - q * d, d)
    }
}

/// Whether gradient component `coord` is constant in the block parameters.
///
/// `g_{W[r][k]} = A'(u_r) z_k` and `g_{b_r} = A'(u_r)`: constant when `A'`
/// is locally constant (Identity, ReLU) or when the weight coordinate's input
/// `z_k` is exactly zero.
fn gradient_component_is_constant(kind: ActivationKind, z: &[f64], slot: usize) -> bool {
    kind.is_piecewise_linear() || (slot < z.len() && z[slot] == 0.0)
}

/// Tangent of the gradient entries of unit `r` along the coordinate `slot` of that unit.
///
/// Returns the `d + 1` non-zero entries of the Hessian row (the unit's weights, then its bias).
fn unit_row(kind: ActivationKind, z: &[f64], u_r: f64, slot: usize) -> Vec<f64> {
    let d = z.len();
    let tangent = if slot < d { z[slot] } else { 1.0 };
    let a1 = activation_first_dual(kind, Dual { v: u_r, d: tangent });
    let mut row = Vec::with_capacity(d + 1);
    for &zk in z {
        row.push(a1.mul(Dual::constant(zk)).d);
    }
    row.push(a1.d);
    row
}

/// Local Hessian computed one row at a time (forward-over-reverse).
pub fn hessian_rowwise(block: &FunctionalBlock, z: &[f64]) -> Result<LocalHessian> {
    let u = block.pre_activation(z)?;
    let (q, d) = (block.outputs(), block.inputs());
    let p = block.param_count();
    let mut h = DenseMatrix::zeros(p, p);
    for j in 0..p {
        let (r, slot) = owner(j, q, d);
        if gradient_component_is_constant(block.activation, z, slot) {
            continue;
        }
        let entries = unit_row(block.activation, z, u[r], slot);
        let row = h.row_mut(j);
        for (k, &v) in entries[..d].iter().enumerate() {
            row[r * d + k] = v;
        }
        row[q * d + r] = entries[d];
    }
    Ok(LocalHessian {
        layer_index: block.layer_index,
        matrix: h,
    })
}

/// Analytic local Hessian.
pub fn hessian_closed_form(block: &FunctionalBlock, z: &[f64]) -> Result<LocalHessian> {
    let u = block.pre_activation(z)?;
    let (q, d) = (block.outputs(), block.inputs());
    let p = block.param_count();
    let mut h = DenseMatrix::zeros(p, p);
    for j in 0..q {
        let a2 = block.activation.second(u[j]);
        if a2 == 0.0 {
            continue;
        }
        for k in 0..d {
            for l in 0..d {
                h[(j * d + k, j * d + l)] = a2 * z[k] * z[l];
            }
            h[(j * d + k, q * d + j)] = a2 * z[k];
            h[(q * d + j, j * d + k)] = a2 * z[k];
        }
        h[(q * d + j, q * d + j)] = a2;
    }
    Ok(LocalHessian {
        layer_index: block.layer_index,
        matrix: h,
    })
}

/// Central second-difference Hessian of the scalar function, symmetrized.
///
/// `H[j,k] = (S(+j,+k) - S(+j,-k) - S(-j,+k) + S(-j,-k)) / (4 h^2)`.
pub fn hessian_fd(block: &FunctionalBlock, z: &[f64], h: f64) -> Result<LocalHessian> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h} outside [1e-6, 1e-3]"
        )));
    }
    block.check_input(z)?;
    let theta = block.params();
    let p = theta.len();
    let mut work = block.clone();
    let mut s_at = |j: usize, sj: f64, k: usize, sk: f64| -> f64 {
        let mut t = theta.clone();
        t[j] += sj * h;
        t[k] += sk * h;
        work.set_params(&t).expect("same shape");
        work.forward(z).expect("checked input").iter().sum::<f64>()
    };
    let mut m = DenseMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let v = (s_at(j, 1.0, k, 1.0) - s_at(j, 1.0, k, -1.0) - s_at(j, -1.0, k, 1.0)
                + s_at(j, -1.0, k, -1.0))
                / (4.0 * h * h);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    Ok(LocalHessian {
        layer_index: block.layer_index,
        matrix: m,
    })
}

/// One local Hessian per block, each at the block's traced input `z_i`.
pub fn all_local_hessians(net: &Network, x: &[f64]) -> Result<Vec<LocalHessian>> {
    let trace = net.forward(x)?;
    net.blocks()
        .iter()
        .zip(&trace.inputs)
        .map(|(block, z)| hessian_rowwise(block, z))
        .collect()
}

/// Block-diagonal form of a local Hessian: one `(d + 1) x (d + 1)` block per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBlockHessian {
    pub layer_index: usize,
    /// Block `j` covers unit `j`'s weights (slots `0..d`) and its bias (slot `d`).
    pub blocks: Vec<DenseMatrix>,
    pub inputs: usize,
}

impl NeuronBlockHessian {
    /// Full parameter count `p = q (d + 1)`.
    pub fn dim(&self) -> usize {
        self.blocks.len() * (self.inputs + 1)
    }

    /// Eigenvalues of the full matrix: the union of each block's spectrum, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut all = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            all.extend(sym_eigenvalues(b)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    /// Scatters the blocks into the dense `p x p` matrix in flattening order.
    pub fn to_dense(&self) -> LocalHessian {
        let (q, d) = (self.blocks.len(), self.inputs);
        let p = self.dim();
        let index = |r: usize, slot: usize| if slot < d { r * d + slot } else { q * d + r };
        let mut m = DenseMatrix::zeros(p, p);
        for (r, b) in self.blocks.iter().enumerate() {
            for a in 0..=d {
                for c in 0..=d {
                    m[(index(r, a), index(r, c))] = b[(a, c)];
                }
            }
        }
        LocalHessian {
            layer_index: self.layer_index,
            matrix: m,
        }
    }
}

/// Row-wise computation restricted to each unit's diagonal block.
pub fn neuron_blocks_rowwise(block: &FunctionalBlock, z: &[f64]) -> Result<NeuronBlockHessian> {
    let u = block.pre_activation(z)?;
    let d = block.inputs();
    let blocks = u
        .iter()
        .map(|&u_r| {
            let mut m = DenseMatrix::zeros(d + 1, d + 1);
            for slot in 0..=d {
                if gradient_component_is_constant(block.activation, z, slot) {
                    continue;
                }
                m.row_mut(slot)
                    .copy_from_slice(&unit_row(block.activation, z, u_r, slot));
            }
            m
        })
        .collect();
    Ok(NeuronBlockHessian {
        layer_index: block.layer_index,
        blocks,
        inputs: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn sigmoid_1x1() -> FunctionalBlock {
        FunctionalBlock::new(
            DenseMatrix::new(1, 1, vec![0.5]).unwrap(),
            vec![0.0],
            ActivationKind::Sigmoid,
            0,
        )
        .unwrap()
    }

    fn random_block(rng: &mut Rng64, q: usize, d: usize, act: ActivationKind) -> (FunctionalBlock, Vec<f64>) {
        let w = (0..q * d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b = (0..q).map(|_| rng.uniform(-0.5, 0.5)).collect();
        let block = FunctionalBlock::new(DenseMatrix::new(q, d, w).unwrap(), b, act, 0).unwrap();
        let z = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        (block, z)
    }

    #[test]
    fn sigmoid_example_rowwise() {
        // Oracle: hessian_fd with h = 1e-4 -> sigma''(1) * [[4, 2], [2, 1]].
        let h = hessian_rowwise(&sigmoid_1x1(), &[2.0]).unwrap().matrix;
        let fd = hessian_fd(&sigmoid_1x1(), &[2.0], 1e-4).unwrap().matrix;
        assert!(h.max_abs_diff(&fd) < 1e-6);
        let expected = [-0.363_431, -0.181_716, -0.181_716, -0.090_858];
        for (a, b) in h.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn fd_matches_closed_form_on_sigmoid_example() {
        let cf = hessian_closed_form(&sigmoid_1x1(), &[2.0]).unwrap().matrix;
        let fd = hessian_fd(&sigmoid_1x1(), &[2.0], DEFAULT_FD_STEP).unwrap().matrix;
        assert!(cf.max_abs_diff(&fd) < 1e-5);
    }

    #[test]
    fn identity_and_relu_rows_are_zero() {
        let mut rng = Rng64::new(3);
        let (b, z) = random_block(&mut rng, 3, 4, ActivationKind::Identity);
        assert_eq!(hessian_rowwise(&b, &z).unwrap().matrix.max_abs(), 0.0);
        assert!(hessian_fd(&b, &z, 1e-4).unwrap().matrix.max_abs() < 1e-6);
        let (b, z) = random_block(&mut rng, 3, 4, ActivationKind::Relu);
        assert_eq!(hessian_rowwise(&b, &z).unwrap().matrix.max_abs(), 0.0);
    }

    #[test]
    fn tanh_at_zero_preactivation() {
        let b = FunctionalBlock::new(
            DenseMatrix::new(2, 2, vec![1.0, -1.0, 2.0, -2.0]).unwrap(),
            vec![0.0, 0.0],
            ActivationKind::Tanh,
            0,
        )
        .unwrap();
        assert_eq!(hessian_closed_form(&b, &[0.5, 0.5]).unwrap().matrix.max_abs(), 0.0);
    }

    #[test]
    fn cross_unit_entries_are_structural_zeros() {
        let b = FunctionalBlock::new(
            DenseMatrix::new(2, 1, vec![0.3, -0.8]).unwrap(),
            vec![0.1, 0.2],
            ActivationKind::Sigmoid,
            0,
        )
        .unwrap();
        let h = hessian_closed_form(&b, &[1.5]).unwrap().matrix;
        // order: W00, W10, b0, b1 -> unit 0 = {0, 2}, unit 1 = {1, 3}
        for (i, j) in [(0, 1), (0, 3), (2, 1), (2, 3)] {
            assert_eq!(h[(i, j)], 0.0);
            assert_eq!(h[(j, i)], 0.0);
        }
        assert!(h[(0, 0)] != 0.0 && h[(1, 1)] != 0.0);
    }

    #[test]
    fn rowwise_matches_closed_form_random() {
        let mut rng = Rng64::new(99);
        for case in 0..40 {
            let act = if case % 2 == 0 { ActivationKind::Sigmoid } else { ActivationKind::Tanh };
            let q = 1 + rng.below(8);
            let d = 1 + rng.below(8);
            let (b, z) = random_block(&mut rng, q, d, act);
            let rw = hessian_rowwise(&b, &z).unwrap().matrix;
            let cf = hessian_closed_form(&b, &z).unwrap().matrix;
            assert!(rw.max_abs_diff(&cf) <= 1e-9 * cf.max_abs().max(1.0));
            assert!(rw.max_asymmetry() <= 1e-10);
        }
    }

    #[test]
    fn tanh_fd_agrees_with_rowwise() {
        let mut rng = Rng64::new(5);
        let (b, z) = random_block(&mut rng, 4, 3, ActivationKind::Tanh);
        let rw = hessian_rowwise(&b, &z).unwrap().matrix;
        let fd = hessian_fd(&b, &z, 1e-4).unwrap().matrix;
        assert!(rw.max_abs_diff(&fd) < 1e-4);
    }

    #[test]
    fn fd_step_range_and_dims() {
        let b = sigmoid_1x1();
        assert!(hessian_fd(&b, &[1.0], 1e-2).is_err());
        assert!(hessian_fd(&b, &[1.0], 1e-7).is_err());
        assert!(hessian_rowwise(&b, &[1.0, 2.0]).is_err());
        assert!(hessian_closed_form(&b, &[]).is_err());
    }

    #[test]
    fn neuron_blocks_scatter_to_rowwise() {
        let mut rng = Rng64::new(8);
        let (b, z) = random_block(&mut rng, 5, 3, ActivationKind::Sigmoid);
        let nb = neuron_blocks_rowwise(&b, &z).unwrap();
        assert_eq!(nb.dim(), b.param_count());
        let dense = hessian_rowwise(&b, &z).unwrap();
        assert_eq!(nb.to_dense().matrix, dense.matrix);
    }

    #[test]
    fn zero_input_coordinate_rows_skipped() {
        let b = FunctionalBlock::new(
            DenseMatrix::new(1, 2, vec![0.4, 0.9]).unwrap(),
            vec![0.2],
            ActivationKind::Tanh,
            0,
        )
        .unwrap();
        let h = hessian_rowwise(&b, &[0.0, 1.3]).unwrap().matrix;
        assert!(h.row(0).iter().all(|&v| v == 0.0));
        assert!(h.row(1).iter().any(|&v| v != 0.0));
    }
}
