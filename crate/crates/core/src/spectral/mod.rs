//! Spectral and statistical characterization of value series and local Hessians.

mod hessian;
mod shapiro;
mod welch;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hessian::{
    hessian_spectrum, near_zero_fraction, neuron_block_spectrum, numerical_rank, rank_tolerance,
    spectrum_from_eigenvalues, symmetry_score, HessianSpectrum, NEAR_ZERO_REL,
};
pub use shapiro::{shapiro_wilk, ShapiroWilk};
pub use welch::{welch_psd, welch_window_for, top_peaks, Peak, WelchPsd, WELCH_HOP, WELCH_WINDOW};

pub const HISTOGRAM_BINS: usize = 64;
pub const TOP_PEAKS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `HISTOGRAM_BINS + 1` edges spanning `[min, max]`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Statistical and spectral summary of one value series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub mean: f64,
    /// Population convention.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
    pub welch: Vec<f64>,
    /// Window length actually used for `welch`.
    pub welch_window: usize,
    pub top_peaks: Vec<Peak>,
}

fn histogram(values: &[f64], min: f64, max: f64) -> Histogram {
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    if max == min {
        counts[0] = values.len() as u64;
        return Histogram {
            bin_edges: vec![min; HISTOGRAM_BINS + 1],
            counts,
        };
    }
    let width = (max - min) / HISTOGRAM_BINS as f64;
    let mut bin_edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| min + i as f64 * width).collect();
    bin_edges[HISTOGRAM_BINS] = max;
    for &v in values {
        let idx = (((v - min) / (max - min)) * HISTOGRAM_BINS as f64).floor() as usize;
        counts[idx.min(HISTOGRAM_BINS - 1)] += 1;
    }
    Histogram { bin_edges, counts }
}

/// Mean, std, extrema, 64-bin histogram, Welch PSD and its top five peaks.
pub fn series_summary(values: &[f64]) -> Result<SpectralSummary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("summary of an empty series".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("summary input".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let welch = welch_psd(values)?;
    let top_peaks = top_peaks(&welch.psd, TOP_PEAKS, welch.window)?;
    Ok(SpectralSummary {
        // Rounding can push the mean a hair outside [min, max] for near-constant series.
        mean: mean.clamp(min, max),
        std,
        min,
        max,
        histogram: histogram(values, min, max),
        welch: welch.psd,
        welch_window: welch.window,
        top_peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let s = series_summary(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.max), (1.0, 0.0, 1.0, 1.0));
        assert_eq!(s.histogram.counts[0], 4);
        assert_eq!(s.histogram.counts.iter().sum::<u64>(), 4);
        assert_eq!(s.histogram.bin_edges.len(), 65);
    }

    #[test]
    fn two_points_population_std() {
        let s = series_summary(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.std, 0.5);
        assert_eq!(s.histogram.counts[0], 1);
        assert_eq!(s.histogram.counts[63], 1);
    }

    #[test]
    fn errors() {
        assert!(series_summary(&[]).is_err());
        assert!(series_summary(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn peaks_sorted() {
        let v: Vec<f64> = (0..600).map(|i| ((i * i) % 17) as f64).collect();
        let s = series_summary(&v).unwrap();
        assert!(s.top_peaks.len() <= TOP_PEAKS);
        assert!(s.top_peaks.windows(2).all(|w| w[0].power >= w[1].power));
    }
}
