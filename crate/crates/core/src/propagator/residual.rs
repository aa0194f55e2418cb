use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::GeneralOperator;
use crate::quadrature::{panel_edges, GaussLegendre, QuadratureSpec};

/// Trace-norm residual of the variation-of-constants equation
///
/// ```text
/// U(t,s) − G(t−s) + ∫ₛᵗ G(t−τ) B(τ) U(τ,s) dτ
/// ```
///
/// for a candidate `u(start, end) ≈ U(end, start)`. The integral uses composite
/// Gauss–Legendre panels, doubled until two passes agree within `quad.tol`.
pub fn integral_equation_residual<F>(
    u: F,
    m: &Model,
    s: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<GeneralOperator>,
{
    m.check_interval(s, t)?;
    if !(s < t) {
        return Err(Error::Ordering { s, t });
    }
    let rule = GaussLegendre::new(quad.nodes);
    let generator = m.generator();
    let breakpoints = m.breakpoints();

    let integral = |panels: usize| -> Result<GeneralOperator> {
        let edges = panel_edges(s, t, &breakpoints, panels);
        let mut acc = GeneralOperator::zeros(m.dim());
        for w in edges.windows(2) {
            for (tau, wt) in rule.mapped(w[0], w[1]) {
                let g = generator.heat_kernel(t - tau)?;
                let b = m.evaluate_perturbation(tau)?;
                let term = &(&g * &b) * &u(s, tau)?;
                acc = &acc + &term.scaled(wt);
            }
        }
        Ok(acc)
    };

    let mut panels = quad.initial_panels.max(1);
    let mut coarse = integral(panels)?;
    let fine = loop {
        if 2 * panels > quad.max_panels {
            return Err(Error::Accuracy {
                what: format!("integral-equation quadrature on [{s}, {t}]"),
                achieved: f64::NAN,
                requested: quad.tol,
            });
        }
        panels *= 2;
        let fine = integral(panels)?;
        if (&fine - &coarse).trace_norm()? <= quad.tol {
            break fine;
        }
        coarse = fine;
    };
    let g = generator.heat_kernel(t - s)?.to_general();
    let residual = &(&u(s, t)? - &g) + &fine;
    residual.trace_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{commuting_lipschitz, Profile};

    #[test]
    fn exact_scalar_has_small_residual() {
        let m = Model::scalar(1.0, Profile::Linear { offset: 0.0, slope: 1.0 }, 1.0).unwrap();
        let quad = QuadratureSpec::default();
        let exact = |a: f64, b: f64| Ok(m.exact(a, b)?.unwrap());
        let r = integral_equation_residual(exact, &m, 0.0, 1.0, &quad).unwrap();
        assert!(r <= quad.tol, "{r:e}");
    }

    #[test]
    fn heat_kernel_alone_leaves_first_dyson_term() {
        let m = commuting_lipschitz(3).unwrap();
        let quad = QuadratureSpec::default();
        let g = |a: f64, b: f64| Ok(m.generator().heat_kernel(b - a)?.to_general());
        let r = integral_equation_residual(g, &m, 0.0, 1.0, &quad).unwrap();
        let s1 = crate::propagator::dyson_phillips_term(&m, 0.0, 1.0, 1, &quad).unwrap();
        assert!((r - s1.trace_norm().unwrap()).abs() < 1e-10);
        assert!(r > 0.1);
    }

    #[test]
    fn unperturbed_heat_kernel_has_zero_residual() {
        let m = Model::commuting(&[1.0, 2.0], &[0.0, 0.0], Profile::zero(), 1.0).unwrap();
        let g = |a: f64, b: f64| Ok(m.generator().heat_kernel(b - a)?.to_general());
        let r = integral_equation_residual(g, &m, 0.2, 0.8, &QuadratureSpec::default()).unwrap();
        assert!(r < 1e-15);
    }
}
