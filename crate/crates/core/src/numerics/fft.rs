use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Reusable power-spectrum transform for one power-of-two length.
pub(crate) struct PowerFft {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl PowerFft {
    pub(crate) fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "FFT length {len} must be a power of two >= 2"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            len,
            fft,
            buffer: vec![Complex::default(); len],
            scratch,
        })
    }

    /// `|X_k|^2` for `k = 0..=len/2`; `signal` must have exactly `len` samples.
    pub(crate) fn power(&mut self, signal: &[f64]) -> Vec<f64> {
        debug_assert_eq!(signal.len(), self.len);
        for (b, &x) in self.buffer.iter_mut().zip(signal) {
            *b = Complex::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        self.buffer[..=self.len / 2]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }
}

/// One-sided power `|FFT[k]|^2`, `k = 0..=n/2`, of a real signal whose length is a power of two.
pub fn real_fft_power(signal: &[f64]) -> Result<Vec<f64>> {
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("FFT input".into()));
    }
    Ok(PowerFft::new(signal.len())?.power(signal))
}

/// Full-spectrum energy `(1/n) sum_k |X_k|^2` recovered from the one-sided power.
pub fn parseval_energy(power: &[f64], n: usize) -> f64 {
    let half = n / 2;
    let interior: f64 = power[1..half].iter().sum();
    (power[0] + 2.0 * interior + power[half]) / n as f64
}
