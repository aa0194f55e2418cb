use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::operator::GeneralOperator;

/// Both sides of `‖∏ V_j e^{-t_j A}‖₁ ≤ ∏‖V_j‖ · ‖e^{-(Σ t_j) A/4}‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Check {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub margin: f64,
    /// `margin ≥ −1e-10·rhs`
    pub holds: bool,
}

/// Evaluates the smoothing product inequality with factors ordered `j = 1..n` left to right.
pub fn verify_lemma21(
    generator: &Generator,
    contractions: &[GeneralOperator],
    times: &[f64],
) -> Result<Lemma21Check> {
    if contractions.is_empty() || contractions.len() != times.len() {
        return Err(Error::Argument(format!(
            "need matching non-empty lists, got {} contractions and {} times",
            contractions.len(),
            times.len()
        )));
    }
    if let Some(&bad) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::Argument(format!("times must be positive, got {bad}")));
    }
    let dim = generator.dim();
    if let Some(v) = contractions.iter().find(|v| v.dim() != dim) {
        return Err(Error::Dimension { expected: dim, found: v.dim() });
    }

    let mut product = GeneralOperator::identity(dim);
    let mut scale = 1.0;
    for (v, &t) in contractions.iter().zip(times) {
        product = &(&product * v) * &generator.heat_kernel(t)?;
        scale *= v.op_norm()?;
    }
    let total: f64 = times.iter().sum();
    let lhs = product.trace_norm()?;
    let rhs = scale * generator.heat_kernel(0.25 * total)?.to_general().trace_norm()?;
    let margin = rhs - lhs;
    Ok(Lemma21Check { lhs, rhs, margin, holds: margin >= -1e-10 * rhs })
}

/// Aggregate of a randomized ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Summary {
    pub seed: u64,
    pub instances: usize,
    pub all_hold: bool,
    pub failures: usize,
    /// Smallest `margin / rhs` seen.
    pub min_relative_margin: f64,
    pub worst_instance: usize,
}

/// One random instance: a generator with spectrum in `[1, 21)`, contractions
/// `Q·diag(σ)` with `Q` orthogonal and `σ ∈ [0, 1]`, and times in `[0.01, 2]`.
pub fn random_instance(
    rng: &mut impl Rng,
    max_dim: usize,
    max_factors: usize,
) -> Result<(Generator, Vec<GeneralOperator>, Vec<f64>)> {
    let dim = rng.random_range(1..=max_dim.max(1));
    let factors = rng.random_range(1..=max_factors.max(1));
    let lambdas: Vec<f64> = (0..dim).map(|_| 1.0 + 20.0 * rng.random::<f64>()).collect();
    let generator = Generator::from_eigenvalues(&lambdas)?;
    let mut contractions = Vec::with_capacity(factors);
    let mut times = Vec::with_capacity(factors);
    for _ in 0..factors {
        let raw = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| rng.random::<f64>()));
        contractions.push(GeneralOperator::new(q * sigma)?);
        times.push(rng.random_range(0.01..=2.0));
    }
    Ok((generator, contractions, times))
}

/// Checks `instances` seeded random instances in parallel; instance `i` draws from
/// a ChaCha stream keyed by `(seed, i)`, so results do not depend on thread count.
pub fn lemma21_ensemble(
    seed: u64,
    instances: usize,
    max_dim: usize,
    max_factors: usize,
) -> Result<Lemma21Summary> {
    let checks = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (g, v, t) = random_instance(&mut rng, max_dim, max_factors)?;
            verify_lemma21(&g, &v, &t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst_instance = 0;
    let mut min_relative_margin = f64::INFINITY;
    for (i, c) in checks.iter().enumerate() {
        let rel = if c.rhs > 0.0 { c.margin / c.rhs } else { c.margin };
        if rel < min_relative_margin {
            min_relative_margin = rel;
            worst_instance = i;
        }
    }
    let failures = checks.iter().filter(|c| !c.holds).count();
    Ok(Lemma21Summary {
        seed,
        instances,
        all_hold: failures == 0,
        failures,
        min_relative_margin,
        worst_instance,
    })
}
