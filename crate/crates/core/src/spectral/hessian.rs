use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::local_hessian::{LocalHessian, NeuronBlockHessian};
use crate::numerics::sym_eigenvalues;

/// Relative cutoff for "near zero" eigenvalues: `|lambda| <= 1e-6 * max(1, max|lambda|)`.
pub const NEAR_ZERO_REL: f64 = 1e-6;

/// Spectral indicators of one local Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSpectrum {
    pub layer_index: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    /// `sum log|lambda|` over eigenvalues above the rank tolerance.
    pub log_abs_det: f64,
    /// Set when `rank < dim`; the determinant is then zero.
    pub singular: bool,
    pub rank: usize,
    /// `max|lambda| / min|lambda|`; `None` means infinite (rank-deficient).
    pub condition: Option<f64>,
    pub near_zero_fraction: f64,
    pub symmetry_score: f64,
}

/// Rank tolerance `tau = dim * eps * max|lambda|`.
pub fn rank_tolerance(eigenvalues: &[f64]) -> f64 {
    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    eigenvalues.len() as f64 * f64::EPSILON * max_abs
}

/// `#{|lambda| > tau}`; zero for an all-zero spectrum.
pub fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let tau = rank_tolerance(eigenvalues);
    eigenvalues.iter().filter(|v| v.abs() > tau).count()
}

pub fn near_zero_fraction(eigenvalues: &[f64]) -> f64 {
    if eigenvalues.is_empty() {
        return 0.0;
    }
    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = NEAR_ZERO_REL * max_abs.max(1.0);
    eigenvalues.iter().filter(|v| v.abs() <= cutoff).count() as f64 / eigenvalues.len() as f64
}

/// `1 - |sum lambda| / sum |lambda|`; 0 for an all-zero spectrum.
pub fn symmetry_score(eigenvalues: &[f64]) -> f64 {
    let abs_sum: f64 = eigenvalues.iter().map(|v| v.abs()).sum();
    if abs_sum == 0.0 {
        return 0.0;
    }
    let sum: f64 = eigenvalues.iter().sum();
    (1.0 - sum.abs() / abs_sum).clamp(0.0, 1.0)
}

/// Indicators from a precomputed ascending spectrum and the matrix trace.
pub fn spectrum_from_eigenvalues(layer_index: usize, eigenvalues: Vec<f64>, trace: f64) -> HessianSpectrum {
    let dim = eigenvalues.len();
    let tau = rank_tolerance(&eigenvalues);
    let above: Vec<f64> = eigenvalues
        .iter()
        .map(|v| v.abs())
        .filter(|&a| a > tau)
        .collect();
    let rank = above.len();
    let log_abs_det = above.iter().map(|a| a.ln()).sum();
    let condition = if rank == dim && rank > 0 {
        let max = above.iter().fold(0.0_f64, |m, &v| m.max(v));
        let min = above.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        Some(max / min)
    } else {
        None
    };
    HessianSpectrum {
        layer_index,
        near_zero_fraction: near_zero_fraction(&eigenvalues),
        symmetry_score: symmetry_score(&eigenvalues),
        eigenvalues,
        trace,
        log_abs_det,
        singular: rank < dim,
        rank,
        condition,
    }
}

/// Eigen-statistics of a dense local Hessian.
pub fn hessian_spectrum(h: &LocalHessian) -> Result<HessianSpectrum> {
    let eigenvalues = sym_eigenvalues(&h.matrix)?;
    Ok(spectrum_from_eigenvalues(h.layer_index, eigenvalues, h.matrix.trace()))
}

/// Eigen-statistics of a block-diagonal local Hessian without materializing it.
pub fn neuron_block_spectrum(h: &NeuronBlockHessian) -> Result<HessianSpectrum> {
    let eigenvalues = h.eigenvalues()?;
    let trace = h.blocks.iter().map(|b| b.trace()).sum();
    Ok(spectrum_from_eigenvalues(h.layer_index, eigenvalues, trace))
}
