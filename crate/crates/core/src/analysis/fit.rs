use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `ln err = intercept + slope · ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of points that entered the fit.
    pub points: usize,
    /// Indices dropped because the error was zero (or not finite).
    pub excluded: Vec<usize>,
}

/// Ordinary least squares on `(ln n, ln err)`, skipping non-positive errors.
pub fn fit_rate(n_list: &[usize], errors: &[f64]) -> Result<RateFit> {
    if n_list.len() != errors.len() {
        return Err(Error::Dimension { expected: n_list.len(), found: errors.len() });
    }
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&n, &e)) in n_list.iter().zip(errors).enumerate() {
        if n == 0 || !(e > 0.0) || !e.is_finite() {
            excluded.push(i);
        } else {
            xs.push((n as f64).ln());
            ys.push(e.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 positive errors, got {}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all n values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared, points: xs.len(), excluded })
}
