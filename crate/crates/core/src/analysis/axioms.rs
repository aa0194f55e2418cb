use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::GeneralOperator;
use crate::propagator::{exact_or_reference, reference_propagator, CONTRACTION_TOL};

/// Cocycle and contraction checks of the oracle propagator on sampled triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomsCheck {
    pub model: String,
    pub tol_ref: f64,
    pub triples: Vec<(f64, f64, f64)>,
    /// `‖U(t,r)U(r,s) − U(t,s)‖₁` per triple.
    pub cocycle_residuals: Vec<f64>,
    /// Largest `‖U(·,·)‖` over the three propagators of each triple.
    pub op_norms: Vec<f64>,
    pub max_cocycle_residual: f64,
    pub max_op_norm: f64,
    /// Residuals within `3·tol_ref` and norms within `1 + 1e-10`.
    pub holds: bool,
}

/// `count` sorted triples `s ≤ r ≤ t` drawn uniformly from `[0, horizon]`.
pub fn sample_triples(seed: u64, count: usize, horizon: f64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = [0.0; 3].map(|_: f64| horizon * rng.random::<f64>());
            x.sort_by(f64::total_cmp);
            (x[0], x[1], x[2])
        })
        .collect()
}

/// Evaluates the cocycle law and the contraction property at each triple, using the
/// closed form when the model has one and the reference propagator otherwise.
pub fn verify_evolution_axioms(
    m: &Model,
    triples: &[(f64, f64, f64)],
    tol_ref: f64,
) -> Result<AxiomsCheck> {
    check_axioms(m, triples, tol_ref, |a, b| Ok(exact_or_reference(m, a, b, tol_ref)?.u))
}

/// Same checks with the reference propagator even where a closed form exists.
pub fn verify_reference_axioms(
    m: &Model,
    triples: &[(f64, f64, f64)],
    tol_ref: f64,
) -> Result<AxiomsCheck> {
    check_axioms(m, triples, tol_ref, |a, b| Ok(reference_propagator(m, a, b, tol_ref)?.u))
}

fn check_axioms<F>(
    m: &Model,
    triples: &[(f64, f64, f64)],
    tol_ref: f64,
    u: F,
) -> Result<AxiomsCheck>
where
    F: Fn(f64, f64) -> Result<GeneralOperator> + Sync,
{
    if let Some(&(s, r, t)) = triples.iter().find(|&&(s, r, t)| !(s <= r && r <= t)) {
        return Err(Error::Argument(format!("triple ({s}, {r}, {t}) is not ordered")));
    }
    let rows = triples
        .par_iter()
        .map(|&(s, r, t)| {
            let (whole, hi, lo) = (u(s, t)?, u(r, t)?, u(s, r)?);
            let residual = (&(&hi * &lo) - &whole).trace_norm()?;
            let norm = whole.op_norm()?.max(hi.op_norm()?).max(lo.op_norm()?);
            Ok((residual, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let (cocycle_residuals, op_norms): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let max_cocycle_residual = cocycle_residuals.iter().copied().fold(0.0, f64::max);
    let max_op_norm = op_norms.iter().copied().fold(0.0, f64::max);
    Ok(AxiomsCheck {
        model: m.descriptor().to_string(),
        tol_ref,
        triples: triples.to_vec(),
        cocycle_residuals,
        op_norms,
        max_cocycle_residual,
        max_op_norm,
        holds: max_cocycle_residual <= 3.0 * tol_ref && max_op_norm <= 1.0 + CONTRACTION_TOL,
    })
}
