//! Model catalogue: a generator `A ≥ 1` paired with a non-negative perturbation
//! family `t ↦ B(t)` and declared regularity exponents `(α, β)`.
//!
//! In finite dimension `e^{-tA}` is trace class for every `t > 0`, so the Gibbs
//! property of the generator holds automatically and is not tracked as a flag.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{GeneralOperator, HermitianOperator};

/// Perturbations with smallest eigenvalue below `-NONNEGATIVITY_TOL` are rejected.
pub const NONNEGATIVITY_TOL: f64 = 1e-12;

/// Number of points in the validation grid over `[0, T]`.
pub const VALIDATION_GRID: usize = 101;

/// Self-adjoint generator with spectrum bounded below by one.
#[derive(Debug, Clone)]
pub struct Generator {
    op: HermitianOperator,
    lambda_min: f64,
}

impl Generator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let lambda_min = op.min_eigenvalue()?;
        if lambda_min < 1.0 - 1e-12 {
            return Err(Error::ModelValidity(format!(
                "generator must satisfy A ≥ 1, smallest eigenvalue is {lambda_min}"
            )));
        }
        Ok(Self { op, lambda_min })
    }

    pub fn from_eigenvalues(lambdas: &[f64]) -> Result<Self> {
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 1.0)) {
            return Err(Error::ModelValidity(format!(
                "generator eigenvalue {bad} is below 1"
            )));
        }
        Self::new(HermitianOperator::from_diagonal(lambdas)?)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `G(t) = e^{-tA}`.
    pub fn heat_kernel(&self, t: f64) -> Result<HermitianOperator> {
        self.op.exp_neg(t)
    }

    /// `A^p`; well defined for every real `p` since `A ≥ 1`.
    pub fn power(&self, p: f64) -> Result<HermitianOperator> {
        self.op.power(p)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.op.eigh()?.eigenvalues.iter().copied().collect())
    }
}

/// Scalar time profile `b(t)` with a closed-form antiderivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    /// `offset + scale·|t − center|^exponent`.
    Holder {
        offset: f64,
        scale: f64,
        center: f64,
        exponent: f64,
    },
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Constant { value: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Linear { offset, slope } => offset + slope * t,
            Profile::Holder {
                offset,
                scale,
                center,
                exponent,
            } => offset + scale * (t - center).abs().powf(exponent),
        }
    }

    /// `∫ₛᵗ b(τ) dτ` in closed form.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value * (t - s),
            Profile::Linear { offset, slope } => offset * (t - s) + 0.5 * slope * (t * t - s * s),
            Profile::Holder {
                offset,
                scale,
                center,
                exponent,
            } => {
                let p = exponent + 1.0;
                let anti = |x: f64| {
                    let d = x - center;
                    d.signum() * d.abs().powf(p) / p
                };
                offset * (t - s) + scale * (anti(t) - anti(s))
            }
        }
    }

    /// Points where the profile fails to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Profile::Holder { scale, center, .. } if scale != 0.0 => vec![center],
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Profile::Constant { value } => value == 0.0,
            Profile::Linear { offset, slope } => offset == 0.0 && slope == 0.0,
            Profile::Holder { offset, scale, .. } => offset == 0.0 && scale == 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Profile::Holder { exponent, .. } = *self {
            if !(exponent > 0.0 && exponent <= 1.0) {
                return Err(Error::ModelValidity(format!(
                    "Hölder profile exponent must lie in (0, 1], got {exponent}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Constant { value } => write!(f, "{value}"),
            Profile::Linear { offset, slope } => write!(f, "{offset}+{slope}t"),
            Profile::Holder {
                offset,
                scale,
                center,
                exponent,
            } => write!(f, "{offset}+{scale}|t-{center}|^{exponent}"),
        }
    }
}

/// How `B(t)` is assembled.
#[derive(Debug, Clone)]
pub enum PerturbationKind {
    /// `B(t) = b(t)·diag(weights)`.
    Diagonal { weights: Vec<f64>, profile: Profile },
    /// `B(t) = (1 + |t − t0|^β) · R(ωt) b0 R(ωt)ᵀ` with a Givens rotation in the
    /// plane of the first two basis vectors.
    Rotating {
        b0: HermitianOperator,
        omega: f64,
        t0: f64,
        exponent: f64,
    },
}

/// `t ↦ B(t)` together with its declared exponents.
#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    kind: PerturbationKind,
    alpha: f64,
    beta: f64,
    descriptor: String,
}

impl PerturbationFamily {
    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn evaluate(&self, t: f64) -> Result<HermitianOperator> {
        match &self.kind {
            PerturbationKind::Diagonal { weights, profile } => {
                let b = profile.value(t);
                let diag: Vec<f64> = weights.iter().map(|w| w * b).collect();
                HermitianOperator::from_diagonal(&diag)
            }
            PerturbationKind::Rotating {
                b0,
                omega,
                t0,
                exponent,
            } => {
                let h = 1.0 + (t - t0).abs().powf(*exponent);
                let r = givens(b0.dim(), omega * t);
                Ok(b0.conjugated(&r)?.scaled(h))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PerturbationKind::Diagonal { weights, profile } => {
                profile.is_zero() || weights.iter().all(|w| *w == 0.0)
            }
            PerturbationKind::Rotating { b0, .. } => b0.matrix().iter().all(|x| *x == 0.0),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PerturbationKind::Diagonal { profile, .. } => profile.breakpoints(),
            PerturbationKind::Rotating { t0, .. } => vec![*t0],
        }
    }
}

/// Rotation by `theta` in the (e₁, e₂)-plane.
pub fn givens(dim: usize, theta: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(dim, dim);
    if dim >= 2 {
        let (s, c) = theta.sin_cos();
        r[(0, 0)] = c;
        r[(0, 1)] = -s;
        r[(1, 0)] = s;
        r[(1, 1)] = c;
    }
    r
}

#[derive(Debug, Clone)]
struct CommutingExact {
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    profile: Profile,
}

/// A generator, a perturbation family on `[0, T]`, and an optional closed-form
/// propagator.
#[derive(Debug, Clone)]
pub struct Model {
    generator: Generator,
    perturbation: PerturbationFamily,
    horizon: f64,
    exact: Option<CommutingExact>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::ModelValidity(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

impl Model {
    /// One-dimensional model `A = a`, `B(t) = b(t)`.
    pub fn scalar(a: f64, profile: Profile, beta: f64) -> Result<Self> {
        let mut m = Self::commuting(&[a], &[1.0], profile, beta)?;
        m.perturbation.descriptor = format!("scalar(a={a}, b={profile})");
        Ok(m)
    }

    /// `A = diag(lambdas)`, `B(t) = b(t)·diag(d0)`; the exact propagator is diagonal.
    pub fn commuting(lambdas: &[f64], d0: &[f64], profile: Profile, beta: f64) -> Result<Self> {
        if lambdas.len() != d0.len() {
            return Err(Error::Dimension {
                expected: lambdas.len(),
                found: d0.len(),
            });
        }
        if let Some(w) = d0.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::ModelValidity(format!(
                "perturbation weight {w} is negative"
            )));
        }
        profile.validate()?;
        check_beta(beta)?;
        let generator = Generator::from_eigenvalues(lambdas)?;
        let perturbation = PerturbationFamily {
            kind: PerturbationKind::Diagonal {
                weights: d0.to_vec(),
                profile,
            },
            alpha: 0.0,
            beta,
            descriptor: format!("commuting(dim={}, b={profile})", lambdas.len()),
        };
        let m = Self {
            generator,
            perturbation,
            horizon: 1.0,
            exact: Some(CommutingExact {
                lambdas: lambdas.to_vec(),
                weights: d0.to_vec(),
                profile,
            }),
        };
        m.validate()?;
        Ok(m)
    }

    /// Non-commuting stress model with tunable Hölder exponent `beta`.
    pub fn rotating(
        lambdas: &[f64],
        b0: HermitianOperator,
        omega: f64,
        beta: f64,
        t0: f64,
    ) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::ModelValidity(
                "rotating model needs dimension at least 2".into(),
            ));
        }
        if b0.dim() != lambdas.len() {
            return Err(Error::Dimension {
                expected: lambdas.len(),
                found: b0.dim(),
            });
        }
        check_beta(beta)?;
        let b0_min = b0.min_eigenvalue()?;
        if b0_min < -NONNEGATIVITY_TOL {
            return Err(Error::ModelValidity(format!(
                "b0 must be non-negative, smallest eigenvalue is {b0_min}"
            )));
        }
        let generator = Generator::from_eigenvalues(lambdas)?;
        let descriptor = format!(
            "rotating(dim={}, omega={omega}, beta={beta}, t0={t0})",
            lambdas.len()
        );
        let perturbation = PerturbationFamily {
            kind: PerturbationKind::Rotating {
                b0,
                omega,
                t0,
                exponent: beta,
            },
            alpha: 0.0,
            beta,
            descriptor,
        };
        let m = Self {
            generator,
            perturbation,
            horizon: 1.0,
            exact: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Sets the declared relative-bound exponent `α ∈ [0, 1)`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::ModelValidity(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        self.perturbation.alpha = alpha;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::ModelValidity(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    /// Checks `B(t) ≥ 0` on a uniform grid over `[0, T]`.
    pub fn validate(&self) -> Result<()> {
        for i in 0..VALIDATION_GRID {
            let t = self.horizon * i as f64 / (VALIDATION_GRID - 1) as f64;
            self.check_nonnegative(t)?;
        }
        Ok(())
    }

    pub fn check_nonnegative(&self, t: f64) -> Result<()> {
        let b = self.perturbation.evaluate(t)?;
        let min = b.min_eigenvalue()?;
        if min < -NONNEGATIVITY_TOL {
            return Err(Error::ModelValidity(format!(
                "B({t}) has negative eigenvalue {min}"
            )));
        }
        Ok(())
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn perturbation(&self) -> &PerturbationFamily {
        &self.perturbation
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn alpha(&self) -> f64 {
        self.perturbation.alpha
    }

    pub fn beta(&self) -> f64 {
        self.perturbation.beta
    }

    pub fn descriptor(&self) -> &str {
        &self.perturbation.descriptor
    }

    /// Non-smooth points of `B(·)` inside `(0, T)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.perturbation
            .breakpoints()
            .into_iter()
            .filter(|&x| x > 0.0 && x < self.horizon)
            .collect()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Range {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    pub fn check_interval(&self, s: f64, t: f64) -> Result<()> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::Ordering { s, t });
        }
        Ok(())
    }

    /// `B(t)` for `t ∈ [0, T]`.
    pub fn evaluate_perturbation(&self, t: f64) -> Result<HermitianOperator> {
        self.check_time(t)?;
        self.perturbation.evaluate(t)
    }

    /// Closed-form `U(t, s)` when the model is commuting; `None` otherwise.
    pub fn exact(&self, s: f64, t: f64) -> Result<Option<GeneralOperator>> {
        self.check_interval(s, t)?;
        Ok(self.exact.as_ref().map(|ex| {
            let b = ex.profile.integral(s, t);
            let diag: Vec<f64> = ex
                .lambdas
                .iter()
                .zip(&ex.weights)
                .map(|(l, w)| (-l * (t - s) - w * b).exp())
                .collect();
            GeneralOperator::from_diagonal(&diag)
        }))
    }
}

/// Named instances used by the verification suites.
pub fn builtin_models() -> Result<Vec<(String, Model)>> {
    let mut out = vec![
        (
            "scalar-linear".to_string(),
            Model::scalar(1.0, Profile::Linear { offset: 0.0, slope: 1.0 }, 1.0)?,
        ),
        (
            "scalar-holder".to_string(),
            Model::scalar(
                2.0,
                Profile::Holder {
                    offset: 0.0,
                    scale: 1.0,
                    center: 0.5,
                    exponent: 0.5,
                },
                0.5,
            )?,
        ),
    ];
    out.push(("commuting-lipschitz".to_string(), commuting_lipschitz(8)?));
    out.push(("rotating-holder".to_string(), rotating_holder(16)?));
    Ok(out)
}

/// `A = diag(1..=dim)`, `B(t) = (1 + t)·diag(1, 1/2, …, 1/dim)`.
pub fn commuting_lipschitz(dim: usize) -> Result<Model> {
    let lambdas: Vec<f64> = (1..=dim).map(|k| k as f64).collect();
    let d0: Vec<f64> = (1..=dim).map(|k| 1.0 / k as f64).collect();
    Model::commuting(&lambdas, &d0, Profile::Linear { offset: 1.0, slope: 1.0 }, 1.0)
}

/// `A = diag(1..=dim)`, `b0 = uuᵀ` with `u_k = k^{-1/2}`, `ω = π`, `β = 1/2`,
/// `t0 = 1/2`.
pub fn rotating_holder(dim: usize) -> Result<Model> {
    let lambdas: Vec<f64> = (1..=dim).map(|k| k as f64).collect();
    let u: Vec<f64> = (1..=dim).map(|k| (k as f64).sqrt().recip()).collect();
    let b0 = HermitianOperator::new(DMatrix::from_fn(dim, dim, |i, j| u[i] * u[j]))?;
    Model::rotating(&lambdas, b0, std::f64::consts::PI, 0.5, 0.5)
}
