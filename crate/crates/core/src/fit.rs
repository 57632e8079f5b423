//! Power-law regression on log–log data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of points behind any reported fit.
pub const MIN_FIT_POINTS: usize = 6;

/// `y ≈ C·x^p` over a window of the independent variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    /// Largest relative deviation of the model from the data over the window.
    pub residual: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    /// Coefficient of an additional linear-in-`x` term in the log model, if fitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nuisance: Option<f64>,
    /// Standard deviation of the exponent over resampled sub-windows, if computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
}

/// Ordinary least squares for `design · β ≈ rhs`.
pub fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    design
        .clone()
        .svd(true, true)
        .solve(rhs, 1e-13)
        .map_err(|e| Error::Fit(e.to_string()))
}

fn check_points(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae, {} ordinates", x.len(), y.len())));
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_POINTS,
            have: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive finite data".into()));
    }
    Ok(())
}

fn window(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Fits `log y = log C + p log x`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    check_points(x, y)?;
    let n = x.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i].ln() });
    let rhs = DVector::from_iterator(n, y.iter().map(|v| v.ln()));
    let beta = least_squares(&design, &rhs)?;
    let (constant, exponent) = (beta[0].exp(), beta[1]);
    let residual = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (constant * xi.powf(exponent) / yi - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        exponent,
        constant,
        residual,
        window: window(x),
        n_samples: n,
        nuisance: None,
        spread: None,
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Number of points for `per_decade` log-spaced samples across `[lo, hi]`.
pub fn points_per_decade(lo: f64, hi: f64, per_decade: usize) -> usize {
    ((hi / lo).log10() * per_decade as f64).round() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let x = log_space(1e-3, 1e-1, 17);
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v.powi(3)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-12);
        assert!((f.constant - 2.5).abs() < 1e-10);
        assert!(f.residual < 1e-11);
        assert_eq!(f.window, (1e-3, 1e-1));
        assert_eq!(points_per_decade(1e-3, 1e-1, 8), 17);
    }

    #[test]
    fn rejects_short_or_invalid_data() {
        assert!(matches!(
            fit_power_law(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InsufficientSamples { .. })
        ));
        let x = log_space(1.0, 2.0, 6);
        let mut y = x.clone();
        y[2] = -1.0;
        assert!(fit_power_law(&x, &y).is_err());
    }
}
