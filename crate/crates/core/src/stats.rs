//! Least-squares fits used by the sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = slope · x + intercept` with goodness of fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// In `[0, 1]`; reported as 0 when `y` is constant.
    pub r_squared: f64,
    /// Zero when only two points are fitted.
    pub slope_std_error: f64,
}

/// Ordinary least squares on at least two distinct abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("abscissae and ordinates differ in length"));
    }
    let distinct = distinct_count(xs);
    if distinct < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: distinct,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let slope_std_error = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
    })
}

fn distinct_count(xs: &[f64]) -> usize {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

/// Minimum number of sweep points for [`log_slope_fit`].
pub const MIN_SWEEP_POINTS: usize = 4;

/// Fits `y = A log(1/hbar) + B` to `(hbar, y)` pairs.
pub fn log_slope_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    let hbars: Vec<f64> = points.iter().map(|p| p.0).collect();
    let distinct = distinct_count(&hbars);
    if distinct < MIN_SWEEP_POINTS || hbars.len() < MIN_SWEEP_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_SWEEP_POINTS,
            got: distinct,
        });
    }
    if hbars.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("hbar values must be positive"));
    }
    let xs: Vec<f64> = hbars.iter().map(|h| (1.0 / h).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    linear_fit(&xs, &ys)
}
