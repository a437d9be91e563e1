//! Least-squares power-law fits on log-log data.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// `log(value) - (intercept + slope * log(n))` per input row.
    pub residuals: Vec<f64>,
}

/// Fits `log y = intercept + slope * log x` by ordinary least squares.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(Error::Input(format!("need at least 3 rows, got {}", points.len())));
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::Input(format!("non-positive or non-finite row ({x}, {y})")));
        }
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Input("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(PowerFit { slope, intercept, residuals })
}
