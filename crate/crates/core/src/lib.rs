//! Product-formula approximation of evolution families generated by
//! non-autonomous perturbations `A + B(t)` of Gibbs semigroups, with trace-norm
//! error certification on finite spectral models.
//!
//! * [`operator`]: dense self-adjoint linear algebra and Schatten norms.
//! * [`model`]: generators, perturbation families and closed-form oracles.
//! * [`propagator`]: product approximants, Dyson–Phillips series, reference propagator.
//! * [`analysis`]: constants, rate regimes, convergence reports, inequality checks.

pub mod analysis;
pub mod error;
pub mod model;
pub mod operator;
pub mod propagator;
pub mod quadrature;

pub use error::{Error, Result};
pub use model::{Generator, Model, PerturbationFamily, Profile};
pub use operator::{GeneralOperator, HermitianOperator, SchattenP};
pub use propagator::{Partition, PropagatorResult, Scheme};
