//! Log-log least squares fitting of decay exponents.

use crate::error::{Error, Result};
use serde::Serialize;

/// Result of fitting `log y ~ slope·log t + intercept` over a time window.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub t_window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    /// 1.96 × standard error of the slope
    pub slope_ci: f64,
    pub n_points: usize,
    /// target exponent `s` of the `O(t^{-s})` statement being tested
    pub target_exponent: f64,
    pub tolerance: f64,
    /// `slope ≤ -target + tolerance`
    pub passed: bool,
}

/// Fit the decay exponent of a positive series over `[t1, t2]`.
///
/// Requires `t2 > 2 t1` and at least 8 samples inside the window.
pub fn loglog_fit(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    target_exponent: f64,
    tolerance: f64,
) -> Result<DecayFit> {
    assert_eq!(times.len(), values.len());
    let (t1, t2) = window;
    if !(t2 > 2.0 * t1) || t1 <= 0.0 {
        return Err(Error::WindowTooShort(format!(
            "need t2 > 2·t1 > 0, got [{t1}, {t2}]"
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t1 && t <= t2)
        .map(|(&t, &y)| (t.ln(), y.max(1e-300).ln()))
        .collect();
    let n = pts.len();
    if n < 8 {
        return Err(Error::WindowTooShort(format!(
            "only {n} samples in [{t1}, {t2}], need ≥ 8"
        )));
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    let passed = slope <= -target_exponent + tolerance;
    Ok(DecayFit {
        t_window: window,
        slope,
        intercept,
        slope_ci: 1.96 * se,
        n_points: n,
        target_exponent,
        tolerance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let times: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-1.3)).collect();
        let fit = loglog_fit(&times, &values, (5.0, 40.0), 1.3, 0.15).unwrap();
        assert!((fit.slope + 1.3).abs() < 1e-12);
        assert!(fit.passed);
        assert!(fit.slope_ci < 1e-10);
    }

    #[test]
    fn window_validation() {
        let times: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let values = vec![1.0; 20];
        assert!(matches!(
            loglog_fit(&times, &values, (8.0, 15.0), 1.0, 0.15),
            Err(Error::WindowTooShort(_))
        ));
        assert!(matches!(
            loglog_fit(&times, &values, (9.0, 19.0), 1.0, 0.15),
            Err(Error::WindowTooShort(_))
        ));
    }

    #[test]
    fn flat_series_fails_decay_target() {
        let times: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let values = vec![0.7; 30];
        let fit = loglog_fit(&times, &values, (3.0, 30.0), 1.0, 0.15).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(!fit.passed);
    }
}
