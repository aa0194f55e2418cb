//! Evolution-family constructions: product formulae, the Dyson–Phillips
//! series, and a high-accuracy reference propagator.

mod dyson;
mod product;
mod reference;
mod residual;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::GeneralOperator;

pub use dyson::{
    dyson_phillips_partial_sums, dyson_phillips_sum, dyson_phillips_sum_with, dyson_phillips_term,
    DEFAULT_EPS_TAIL, MAX_BISECTION_DEPTH, MAX_SERIES_DEPTH,
};
pub use product::{product_approximant, step_factor, ProductBuilder};
pub use reference::{cross_validate_reference, reference_propagator, MAX_REFERENCE_STEPS};
pub use residual::integral_equation_residual;

/// Product-formula variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `e^{-τA} e^{-τB(t_k)}`
    Left,
    /// `e^{-τB(t_k)} e^{-τA}`
    Right,
    /// `e^{-τA/2} e^{-τB(t_k)} e^{-τA/2}`
    Symmetric,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Left, Scheme::Right, Scheme::Symmetric];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Left => "left",
            Scheme::Right => "right",
            Scheme::Symmetric => "symmetric",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Scheme::Left),
            "right" => Ok(Scheme::Right),
            "symmetric" => Ok(Scheme::Symmetric),
            other => Err(Error::Argument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Uniform left-endpoint grid `t_k = s + (k−1)(t−s)/n`, `k = 1..=n`.
///
/// The last point is `t − (t−s)/n`; `t` itself is not a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    s: f64,
    t: f64,
    n: usize,
    points: Vec<f64>,
}

impl Partition {
    pub fn new(s: f64, t: f64, n: usize) -> Result<Self> {
        if !(s < t) {
            return Err(Error::Ordering { s, t });
        }
        if n == 0 {
            return Err(Error::Argument("partition needs n ≥ 1".into()));
        }
        let step = (t - s) / n as f64;
        let points = (0..n).map(|k| s + k as f64 * step).collect();
        Ok(Self { s, t, n, points })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        (self.t - self.s) / self.n as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Same as [`Partition::new`].
pub fn make_partition(s: f64, t: f64, n: usize) -> Result<Partition> {
    Partition::new(s, t, n)
}

/// How a [`PropagatorResult`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Product { scheme: Scheme, n: usize },
    Dyson { depth: usize, pieces: usize },
    Reference { tol: f64, steps: usize, achieved: f64 },
    Exact,
}

/// A computed `U(t, s)` with provenance.
#[derive(Debug, Clone)]
pub struct PropagatorResult {
    pub u: GeneralOperator,
    pub s: f64,
    pub t: f64,
    pub method: Method,
    /// Geometric tail bound of a truncated Dyson–Phillips series.
    pub tail_bound: Option<f64>,
}

/// Contraction slack allowed on every computed propagator.
pub const CONTRACTION_TOL: f64 = 1e-10;

impl PropagatorResult {
    pub fn is_contraction(&self) -> Result<bool> {
        Ok(self.u.op_norm()? <= 1.0 + CONTRACTION_TOL)
    }
}

/// `U(t, s)` from the closed form when the model has one, else from the reference
/// propagator at tolerance `tol`.
pub fn exact_or_reference(
    m: &crate::model::Model,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<PropagatorResult> {
    match m.exact(s, t)? {
        Some(u) => Ok(PropagatorResult {
            u,
            s,
            t,
            method: Method::Exact,
            tail_bound: None,
        }),
        None => reference_propagator(m, s, t, tol),
    }
}
