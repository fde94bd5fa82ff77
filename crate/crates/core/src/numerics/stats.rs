use crate::error::{dim_err, Error, Result};

/// Arithmetic mean with a fixed left-to-right summation order.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/n) standard deviation.
pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
///
/// Constant series have no defined correlation and are reported as an error.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(dim_err!("series lengths differ: {} vs {}", x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "correlation of a constant series".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_negated() {
        let x = [0.3, 1.2, -0.7, 2.5];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_corr(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_corr(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_known_value() {
        // Sums over deviations: sxy = 3, sxx = 2, syy = 14/3.
        let expected = 3.0 / (2.0_f64 * 14.0 / 3.0).sqrt();
        let r = pearson_corr(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.981_980_506_061_965_6).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(pearson_corr(&[1.0, 2.0], &[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(
            pearson_corr(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Undefined(_))
        ));
        assert!(pearson_corr(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn population_convention() {
        assert_eq!(population_std(&[0.0, 1.0]), 0.5);
    }
}
