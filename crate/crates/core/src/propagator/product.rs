use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{GeneralOperator, HermitianOperator};

use super::{Method, Partition, PropagatorResult, Scheme};

/// One factor `W_k` of the product formula at grid point `t_k` with step `tau`.
pub fn step_factor(scheme: Scheme, m: &Model, t_k: f64, tau: f64) -> Result<GeneralOperator> {
    ProductBuilder::new(m, scheme, tau)?.factor(t_k)
}

/// Builds factors for a fixed scheme and step, caching the `A` exponential.
pub struct ProductBuilder<'a> {
    model: &'a Model,
    scheme: Scheme,
    tau: f64,
    heat: HermitianOperator,
}

impl<'a> ProductBuilder<'a> {
    pub fn new(model: &'a Model, scheme: Scheme, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Argument(format!("step must be positive, got {tau}")));
        }
        let heat_step = match scheme {
            Scheme::Symmetric => 0.5 * tau,
            Scheme::Left | Scheme::Right => tau,
        };
        Ok(Self {
            model,
            scheme,
            tau,
            heat: model.generator().heat_kernel(heat_step)?,
        })
    }

    pub fn factor(&self, t_k: f64) -> Result<GeneralOperator> {
        let kick = self.model.evaluate_perturbation(t_k)?.exp_neg(self.tau)?;
        Ok(match self.scheme {
            Scheme::Left => &self.heat * &kick,
            Scheme::Right => &kick * &self.heat,
            Scheme::Symmetric => &(&self.heat * &kick) * &self.heat,
        })
    }

    /// `W_hi ⋯ W_lo` over the given grid points (the last point is applied last).
    pub fn ordered_product(&self, points: &[f64]) -> Result<GeneralOperator> {
        let mut u = GeneralOperator::identity(self.model.dim());
        for &t_k in points {
            u = &self.factor(t_k)? * &u;
        }
        Ok(u)
    }
}

/// `U_n(t, s) = W_n ⋯ W_1` on the uniform left-endpoint grid.
pub fn product_approximant(
    scheme: Scheme,
    m: &Model,
    s: f64,
    t: f64,
    n: usize,
) -> Result<PropagatorResult> {
    m.check_interval(s, t)?;
    let partition = Partition::new(s, t, n)?;
    let builder = ProductBuilder::new(m, scheme, partition.step())?;
    let u = builder.ordered_product(partition.points())?;
    Ok(PropagatorResult {
        u,
        s,
        t,
        method: Method::Product { scheme, n },
        tail_bound: None,
    })
}
