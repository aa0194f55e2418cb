use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{GeneralOperator, HermitianOperator};

/// Grid size used to approximate essential suprema over time.
pub const DEFAULT_GRID: usize = 1001;

/// Numerical estimates of the regularity constants on `[s, t]`.
///
/// Suprema over time are maxima over a uniform grid; for continuous families they
/// under-estimate by at most the modulus of continuity at the grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub t: f64,
    /// `max_i ‖B(t_i) A^{-α}‖`
    pub c_alpha: f64,
    /// `max_{i≠j} ‖A^{-α}(B(t_i) − B(t_j))A^{-α}‖ / |t_i − t_j|^β`
    pub l_alpha_beta: f64,
    /// `sup_{0<τ≤t−s} τ^α ‖e^{-τA} A^α‖`
    pub m_alpha: f64,
    /// `C_α M_α (t−s)^{1−α} / (1−α)`
    pub xi: f64,
    pub grid_size: usize,
}

impl ConstantsReport {
    /// Recomputes `ξ` from the other fields.
    pub fn xi_from_parts(&self) -> f64 {
        xi_formula(self.c_alpha, self.m_alpha, self.alpha, self.t - self.s)
    }
}

fn xi_formula(c: f64, m: f64, alpha: f64, span: f64) -> f64 {
    c * m * span.powf(1.0 - alpha) / (1.0 - alpha)
}

fn grid_points(s: f64, t: f64, grid: usize) -> Vec<f64> {
    (0..grid)
        .map(|i| {
            if i == grid - 1 {
                t
            } else {
                s + (t - s) * i as f64 / (grid - 1) as f64
            }
        })
        .collect()
}

fn check_grid(m: &Model, s: f64, t: f64, grid: usize) -> Result<()> {
    m.check_interval(s, t)?;
    if grid < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 points, got {grid}")));
    }
    if !(s < t) {
        return Err(Error::Ordering { s, t });
    }
    Ok(())
}

fn c_alpha(m: &Model, times: &[f64], inv_power: &HermitianOperator) -> Result<f64> {
    let alpha = m.alpha();
    times
        .par_iter()
        .map(|&x| {
            let b = m.evaluate_perturbation(x)?;
            if alpha == 0.0 {
                b.op_norm()
            } else {
                (&b * inv_power).op_norm()
            }
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `sup_{0<τ≤span} τ^α max_λ λ^α e^{-τλ}`: grid maximum together with the `τ → 0`
/// limit, which is `1` for `α = 0` and `0` otherwise.
fn m_alpha(lambdas: &[f64], alpha: f64, span: f64, grid: usize) -> f64 {
    let limit_at_zero = if alpha == 0.0 { 1.0 } else { 0.0 };
    (1..grid)
        .map(|i| {
            let tau = span * i as f64 / (grid - 1) as f64;
            lambdas
                .iter()
                .map(|&l| (tau * l).powf(alpha) * (-tau * l).exp())
                .fold(0.0, f64::max)
        })
        .fold(limit_at_zero, f64::max)
}

/// Contraction coefficient `ξ` on `[s, t]` from grid estimates of `C_α` and `M_α`.
pub fn contraction_coefficient(m: &Model, s: f64, t: f64, grid: usize) -> Result<f64> {
    check_grid(m, s, t, grid)?;
    if m.perturbation().is_zero() {
        return Ok(0.0);
    }
    let alpha = m.alpha();
    let inv = m.generator().power(-alpha)?;
    let c = c_alpha(m, &grid_points(s, t, grid), &inv)?;
    let mm = m_alpha(&m.generator().eigenvalues()?, alpha, t - s, grid);
    Ok(xi_formula(c, mm, alpha, t - s))
}

/// Estimates `C_α`, `L_{α,β}`, `M_α` and `ξ` on a `grid`-point uniform grid over `[s, t]`.
///
/// The Hölder constant takes all `grid·(grid−1)/2` pairs into account.
pub fn estimate_constants(m: &Model, s: f64, t: f64, grid: usize) -> Result<ConstantsReport> {
    check_grid(m, s, t, grid)?;
    let (alpha, beta) = (m.alpha(), m.beta());
    let times = grid_points(s, t, grid);
    let inv = m.generator().power(-alpha)?;
    let c = c_alpha(m, &times, &inv)?;

    let sandwiched = times
        .par_iter()
        .map(|&x| {
            let b = m.evaluate_perturbation(x)?;
            Ok((&inv * &(&b * &inv)).into_matrix())
        })
        .collect::<Result<Vec<_>>>()?;
    let l = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut worst: f64 = 0.0;
            for j in (i + 1)..grid {
                let diff = HermitianOperator::new(&sandwiched[i] - &sandwiched[j])?;
                let q = diff.op_norm()? / (times[j] - times[i]).abs().powf(beta);
                worst = worst.max(q);
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    let mm = m_alpha(&m.generator().eigenvalues()?, alpha, t - s, grid);
    Ok(ConstantsReport {
        alpha,
        beta,
        s,
        t,
        c_alpha: c,
        l_alpha_beta: l,
        m_alpha: mm,
        xi: xi_formula(c, mm, alpha, t - s),
        grid_size: grid,
    })
}

/// `‖B(t)A^{-α}‖` at a single time; exposed for diagnostics.
pub(crate) fn _relative_bound(m: &Model, t: f64) -> Result<f64> {
    let inv = m.generator().power(-m.alpha())?;
    let b = m.evaluate_perturbation(t)?;
    GeneralOperator::op_norm(&(&b * &inv))
}
