//! Statistical and spectral summary of a value series, plus a normality test.

use lhessian::rng::Rng64;
use lhessian::spectral::{series_summary, shapiro_wilk, welch_psd};

fn main() -> lhessian::Result<()> {
    let mut rng = Rng64::new(11);
    let series: Vec<f64> = (0..1024)
        .map(|i| (2.0 * std::f64::consts::PI * 40.0 * i as f64 / 256.0).sin() + 0.3 * rng.normal())
        .collect();

    let psd = welch_psd(&series)?;
    println!("Welch: window {} with {} segments", psd.window, psd.segments);
    let s = series_summary(&series)?;
    println!("mean {:.4} std {:.4} range [{:.3}, {:.3}]", s.mean, s.std, s.min, s.max);
    for p in &s.top_peaks {
        println!("peak at bin {} (f = {:.4}) power {:.3}", p.bin, p.frequency, p.power);
    }

    let noise: Vec<f64> = (0..200).map(|_| rng.normal()).collect();
    let sw = shapiro_wilk(&noise)?;
    println!("Shapiro-Wilk on Gaussian noise: W = {:.4}, p = {:.3}", sw.w, sw.p_value);
    let skewed: Vec<f64> = noise.iter().map(|v| v.exp()).collect();
    let sw = shapiro_wilk(&skewed)?;
    println!("Shapiro-Wilk on log-normal data: W = {:.4}, p = {:.2e}", sw.w, sw.p_value);
    Ok(())
}
