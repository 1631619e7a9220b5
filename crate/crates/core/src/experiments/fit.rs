//! Log-log least-squares fits of bias and variance against sample size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows with |bias| below this are treated as numerically zero and left out
/// of the bias fit.
pub const BIAS_NOISE_FLOOR: f64 = 1e-12;

/// What the fit needs from one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: usize,
    pub bias: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = intercept + slope·x.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { x: xs.len(), y: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientRows(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("n_grid", "regression needs at least two distinct sample sizes"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRates {
    /// Decay exponent of |bias| (negated log-log slope).
    pub bias_slope: f64,
    pub variance_slope: f64,
    pub bias_fit: LineFit,
    pub variance_fit: LineFit,
    /// Inclusive n range used for the bias fit.
    pub bias_fit_range: (usize, usize),
    pub variance_fit_range: (usize, usize),
    /// Sample sizes dropped from the bias fit because |bias| was at the noise floor.
    pub excluded: Vec<usize>,
}

/// Fits log10|bias| and log10 variance against log10 n.
///
/// The bias fit uses rows with `n >= bias_fit_min_n`; the variance fit uses
/// every row.
pub fn fit_rates(rows: &[FitPoint], bias_fit_min_n: Option<usize>) -> Result<FittedRates> {
    let min_n = bias_fit_min_n.unwrap_or(0);
    let mut excluded = Vec::new();
    let mut bias_pts = Vec::new();
    for r in rows.iter().filter(|r| r.n >= min_n) {
        if !r.bias.is_finite() || r.bias.abs() < BIAS_NOISE_FLOOR {
            excluded.push(r.n);
        } else {
            bias_pts.push(((r.n as f64).log10(), r.bias.abs().log10(), r.n));
        }
    }
    if bias_pts.len() < 3 {
        return Err(Error::InsufficientRows(bias_pts.len()));
    }
    let var_pts: Vec<(f64, f64, usize)> = rows
        .iter()
        .filter(|r| r.variance > 0.0 && r.variance.is_finite())
        .map(|r| ((r.n as f64).log10(), r.variance.log10(), r.n))
        .collect();
    if var_pts.len() < 3 {
        return Err(Error::InsufficientRows(var_pts.len()));
    }
    let fit = |pts: &[(f64, f64, usize)]| {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        ols(&xs, &ys)
    };
    let range = |pts: &[(f64, f64, usize)]| {
        (
            pts.iter().map(|p| p.2).min().unwrap_or(0),
            pts.iter().map(|p| p.2).max().unwrap_or(0),
        )
    };
    let bias_fit = fit(&bias_pts)?;
    let variance_fit = fit(&var_pts)?;
    Ok(FittedRates {
        bias_slope: -bias_fit.slope,
        variance_slope: -variance_fit.slope,
        bias_fit,
        variance_fit,
        bias_fit_range: range(&bias_pts),
        variance_fit_range: range(&var_pts),
        excluded,
    })
}
