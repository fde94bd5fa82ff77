use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::PowerFft;

pub const WELCH_WINDOW: usize = 256;
pub const WELCH_HOP: usize = 128;
const MIN_WINDOW: usize = 8;

/// Welch power spectral density estimate (unit sampling rate, one-sided).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchPsd {
    /// `window / 2 + 1` bins; bin `k` is at normalized frequency `k / window`.
    pub psd: Vec<f64>,
    pub window: usize,
    pub segments: usize,
}

impl WelchPsd {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 / self.window as f64
    }
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect()
}

/// Window length used for a signal of `n` samples.
///
/// 256 when the signal is long enough; otherwise the largest power of two
/// not exceeding `n`, and never below 8 (shorter signals are zero-padded).
pub fn welch_window_for(n: usize) -> usize {
    if n >= WELCH_WINDOW {
        WELCH_WINDOW
    } else if n <= MIN_WINDOW {
        MIN_WINDOW
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

/// Welch PSD: Hann-windowed, mean-removed segments of length 256 with hop 128,
/// averaged and scaled by `1 / sum(w^2)` with interior bins doubled.
///
/// Signals shorter than the window use the reduced window from
/// [`welch_window_for`] with a half-window hop.
pub fn welch_psd(signal: &[f64]) -> Result<WelchPsd> {
    if signal.is_empty() {
        return Err(Error::InvalidArgument("Welch PSD of an empty signal".into()));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Welch PSD input".into()));
    }
    let window = welch_window_for(signal.len());
    let hop = window / 2;
    let w = hann(window);
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let mut fft = PowerFft::new(window)?;

    let mut acc = vec![0.0; window / 2 + 1];
    let mut segment = vec![0.0; window];
    let mut segments = 0;
    let mut start = 0;
    loop {
        let end = (start + window).min(signal.len());
        let chunk = &signal[start..end];
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        segment.iter_mut().for_each(|s| *s = 0.0);
        for (i, &x) in chunk.iter().enumerate() {
            segment[i] = (x - mean) * w[i];
        }
        for (a, p) in acc.iter_mut().zip(fft.power(&segment)) {
            *a += p;
        }
        segments += 1;
        start += hop;
        if start + window > signal.len() {
            break;
        }
    }

    let last = window / 2;
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || k == last { 1.0 } else { 2.0 };
            one_sided * p / (norm * segments as f64)
        })
        .collect();
    Ok(WelchPsd {
        psd,
        window,
        segments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub bin: usize,
    pub frequency: f64,
    pub power: f64,
}

/// Up to `k` local maxima of a PSD, by descending power.
///
/// A bin is a local maximum when it is strictly above both neighbours;
/// boundary bins compare against their single neighbour. `window` converts
/// bins to normalized frequencies.
pub fn top_peaks(psd: &[f64], k: usize, window: usize) -> Result<Vec<Peak>> {
    if psd.is_empty() {
        return Err(Error::InvalidArgument("peak search on an empty PSD".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = psd.len();
    let mut peaks: Vec<Peak> = (0..n)
        .filter(|&i| {
            let left = i == 0 || psd[i] > psd[i - 1];
            let right = i + 1 == n || psd[i] > psd[i + 1];
            left && right
        })
        .map(|i| Peak {
            bin: i,
            frequency: i as f64 / window as f64,
            power: psd[i],
        })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.bin.cmp(&b.bin)));
    peaks.truncate(k);
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(bin: usize, len: usize) -> Vec<f64> {
        (0..len)
            .map(|t| (2.0 * PI * bin as f64 * t as f64 / 256.0).sin())
            .collect()
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0
    }

    #[test]
    fn zero_signal() {
        let p = welch_psd(&[0.0; 1024]).unwrap();
        assert_eq!(p.psd.len(), 129);
        assert_eq!(p.segments, 7);
        assert!(p.psd.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_peak_at_bin_32() {
        let p = welch_psd(&sine(32, 1024)).unwrap();
        assert_eq!(argmax(&p.psd), 32);
        let peaks = top_peaks(&p.psd, 1, p.window).unwrap();
        assert_eq!(peaks[0].bin, 32);
        assert!((peaks[0].frequency - 0.125).abs() < 1e-15);
    }

    #[test]
    fn short_signal_window() {
        assert_eq!(welch_window_for(3), 8);
        assert_eq!(welch_window_for(100), 64);
        assert_eq!(welch_window_for(255), 128);
        assert_eq!(welch_window_for(256), 256);
        let p = welch_psd(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!((p.window, p.psd.len(), p.segments), (8, 5, 1));
        assert!(welch_psd(&[]).is_err());
        assert!(welch_psd(&[f64::NAN; 4]).is_err());
    }

    #[test]
    fn peak_ordering_and_boundaries() {
        let monotone: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let p = top_peaks(&monotone, 5, 38).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].bin, 19);

        let mut spikes = vec![0.0; 64];
        spikes[10] = 3.0;
        spikes[40] = 5.0;
        let p = top_peaks(&spikes, 5, 126).unwrap();
        assert_eq!(p.iter().map(|x| x.bin).collect::<Vec<_>>(), vec![40, 10]);
        assert!(top_peaks(&[], 1, 8).is_err());
    }
}
