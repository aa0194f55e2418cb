//! Dyson–Phillips series `U(t, s) = Σ_k S_k(t, s)` with
//! `S_0 = G(t − s)` and `S_k(t, s) = −∫ₛᵗ G(t − τ) B(τ) S_{k−1}(τ, s) dτ`.
//!
//! All terms are computed in the eigenbasis of `A`, where `G` is diagonal. Each
//! level is tabulated at the composite Gauss–Legendre nodes of `[s, t]`. The
//! integral up to a node is split into full panels, accumulated by a running
//! propagated sum, and the partial panel containing the node, integrated by a
//! sub-rule whose integrand values are interpolated from that panel's nodes.

use nalgebra::DMatrix;

use crate::analysis::{contraction_coefficient, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::GeneralOperator;
use crate::quadrature::{lagrange_basis, panel_edges, GaussLegendre, QuadratureSpec};

use super::{Method, PropagatorResult};

/// Deepest series truncation.
pub const MAX_SERIES_DEPTH: usize = 40;
/// Deepest interval bisection before giving up.
pub const MAX_BISECTION_DEPTH: usize = 32;
pub const DEFAULT_EPS_TAIL: f64 = 1e-10;

/// Largest contraction coefficient accepted without bisecting.
const XI_SPLIT: f64 = 0.5;

struct Engine<'a> {
    model: &'a Model,
    basis: DMatrix<f64>,
    lambdas: Vec<f64>,
    rule: GaussLegendre,
    /// `sub[i][j][m]`: basis function `m` of the panel rule at the `j`-th sub-node
    /// of `[-1, ξ_i]`.
    sub: Vec<Vec<Vec<f64>>>,
}

impl<'a> Engine<'a> {
    fn new(model: &'a Model, nodes: usize) -> Result<Self> {
        let spec = model.generator().op().eigh()?;
        let rule = GaussLegendre::new(nodes);
        let sub = rule
            .nodes
            .iter()
            .map(|&xi| {
                rule.nodes
                    .iter()
                    .map(|&eta| {
                        let y = -1.0 + 0.5 * (xi + 1.0) * (eta + 1.0);
                        lagrange_basis(&rule.nodes, y)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            model,
            basis: spec.eigenvectors.clone(),
            lambdas: spec.eigenvalues.iter().copied().collect(),
            rule,
            sub,
        })
    }

    /// `diag(e^{-δλ}) · M`
    fn propagate(&self, delta: f64, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, l) in self.lambdas.iter().enumerate() {
            out.row_mut(i).scale_mut((-delta * l).exp());
        }
        out
    }

    fn to_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.transpose() * m * &self.basis
    }

    fn from_eigenbasis(&self, m: &DMatrix<f64>) -> GeneralOperator {
        GeneralOperator::new(&self.basis * m * self.basis.transpose())
            .expect("square by construction")
    }

    /// `S_0(t,s) … S_depth(t,s)` in the eigenbasis with `panels` panels per smooth piece.
    fn levels(&self, s: f64, t: f64, depth: usize, panels: usize) -> Result<Vec<DMatrix<f64>>> {
        let d = self.lambdas.len();
        let edges = panel_edges(s, t, &self.model.breakpoints(), panels);
        let q = self.rule.len();

        let mut nodes = Vec::with_capacity(q * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            for (x, wt) in self.rule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        let b_nodes = nodes
            .iter()
            .map(|&x| Ok(self.to_eigenbasis(self.model.evaluate_perturbation(x)?.matrix())))
            .collect::<Result<Vec<_>>>()?;

        let identity = DMatrix::<f64>::identity(d, d);
        let mut current: Vec<DMatrix<f64>> =
            nodes.iter().map(|&x| self.propagate(x - s, &identity)).collect();
        let mut out = vec![self.propagate(t - s, &identity)];

        for _ in 1..=depth {
            let integrand: Vec<DMatrix<f64>> = b_nodes
                .iter()
                .zip(&current)
                .map(|(b, sk)| b * sk)
                .collect();
            let mut next = Vec::with_capacity(nodes.len());
            // running ∫ₛ^{a_p} G(a_p − τ) F(τ) dτ at the current panel start
            let mut acc = DMatrix::<f64>::zeros(d, d);
            for (p, w) in edges.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                let panel = &integrand[p * q..(p + 1) * q];
                for i in 0..q {
                    let x = nodes[p * q + i];
                    let mut val = self.propagate(x - a, &acc);
                    let half = 0.5 * (x - a);
                    for j in 0..q {
                        let y = a + half * (self.rule.nodes[j] + 1.0);
                        let mut f = DMatrix::<f64>::zeros(d, d);
                        for (m, l) in self.sub[i][j].iter().enumerate() {
                            f += &panel[m] * *l;
                        }
                        val += self.propagate(x - y, &f) * (half * self.rule.weights[j]);
                    }
                    next.push(-val);
                }
                let mut new_acc = self.propagate(b - a, &acc);
                for i in 0..q {
                    let k = p * q + i;
                    new_acc += self.propagate(b - nodes[k], &integrand[k]) * weights[k];
                }
                acc = new_acc;
            }
            out.push(-acc);
            current = next;
        }
        Ok(out)
    }

    /// Panel doubling until every level agrees across two passes within `quad.tol`.
    fn converged_levels(
        &self,
        s: f64,
        t: f64,
        depth: usize,
        quad: &QuadratureSpec,
    ) -> Result<Vec<DMatrix<f64>>> {
        let mut panels = quad.initial_panels.max(1);
        let mut coarse = self.levels(s, t, depth, panels)?;
        if depth == 0 {
            return Ok(coarse);
        }
        let mut diff = f64::INFINITY;
        while 2 * panels <= quad.max_panels {
            panels *= 2;
            let fine = self.levels(s, t, depth, panels)?;
            diff = max_level_diff(&fine, &coarse)?;
            if diff <= quad.tol {
                return Ok(fine);
            }
            coarse = fine;
        }
        Err(Error::Accuracy {
            what: format!("Dyson–Phillips quadrature on [{s}, {t}]"),
            achieved: diff,
            requested: quad.tol,
        })
    }
}

fn max_level_diff(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = GeneralOperator::new(x - y).expect("square").trace_norm()?;
        worst = worst.max(diff);
    }
    Ok(worst)
}

fn check_args(m: &Model, s: f64, t: f64, quad: &QuadratureSpec) -> Result<()> {
    m.check_interval(s, t)?;
    if s == t {
        return Err(Error::Ordering { s, t });
    }
    if quad.nodes == 0 || !(quad.tol > 0.0) {
        return Err(Error::Argument(
            "quadrature needs at least one node and a positive tolerance".into(),
        ));
    }
    Ok(())
}

/// The `k`-th Dyson–Phillips term `S_k(t, s)`.
pub fn dyson_phillips_term(
    m: &Model,
    s: f64,
    t: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<GeneralOperator> {
    check_args(m, s, t, quad)?;
    let engine = Engine::new(m, quad.nodes)?;
    let levels = engine.converged_levels(s, t, k, quad)?;
    Ok(engine.from_eigenbasis(&levels[k]))
}

/// Partial sums `Σ_{k ≤ N} S_k(t, s)` for `N = 0..=depth`.
pub fn dyson_phillips_partial_sums(
    m: &Model,
    s: f64,
    t: f64,
    depth: usize,
    quad: &QuadratureSpec,
) -> Result<Vec<GeneralOperator>> {
    check_args(m, s, t, quad)?;
    let engine = Engine::new(m, quad.nodes)?;
    let levels = engine.converged_levels(s, t, depth, quad)?;
    let mut sum = DMatrix::<f64>::zeros(m.dim(), m.dim());
    Ok(levels
        .iter()
        .map(|l| {
            sum += l;
            engine.from_eigenbasis(&sum)
        })
        .collect())
}

/// Truncated series with geometric tail control, bisecting `[s, t]` and composing
/// through the cocycle law wherever the contraction coefficient reaches `1/2`.
pub fn dyson_phillips_sum(m: &Model, s: f64, t: f64, eps_tail: f64) -> Result<PropagatorResult> {
    dyson_phillips_sum_with(m, s, t, eps_tail, &QuadratureSpec::default())
}

pub fn dyson_phillips_sum_with(
    m: &Model,
    s: f64,
    t: f64,
    eps_tail: f64,
    quad: &QuadratureSpec,
) -> Result<PropagatorResult> {
    check_args(m, s, t, quad)?;
    if !(eps_tail > 0.0) {
        return Err(Error::Argument(format!(
            "tail tolerance must be positive, got {eps_tail}"
        )));
    }
    let engine = Engine::new(m, quad.nodes)?;
    let mut pieces = 0;
    let mut max_depth = 0;
    let (u, tail) = sum_on(&engine, s, t, eps_tail, quad, 0, &mut pieces, &mut max_depth)?;
    Ok(PropagatorResult {
        u: engine.from_eigenbasis(&u),
        s,
        t,
        method: Method::Dyson {
            depth: max_depth,
            pieces,
        },
        tail_bound: Some(tail),
    })
}

/// Smallest `N` with `ξ^{N+1}/(1−ξ) ≤ eps`, capped at [`MAX_SERIES_DEPTH`].
fn series_depth(xi: f64, eps: f64) -> usize {
    (0..MAX_SERIES_DEPTH)
        .find(|&n| tail_bound(xi, n) <= eps)
        .unwrap_or(MAX_SERIES_DEPTH)
}

fn tail_bound(xi: f64, n: usize) -> f64 {
    xi.powi(n as i32 + 1) / (1.0 - xi)
}

#[allow(clippy::too_many_arguments)]
fn sum_on(
    engine: &Engine<'_>,
    s: f64,
    t: f64,
    eps: f64,
    quad: &QuadratureSpec,
    level: usize,
    pieces: &mut usize,
    max_depth: &mut usize,
) -> Result<(DMatrix<f64>, f64)> {
    let xi = contraction_coefficient(engine.model, s, t, DEFAULT_GRID)?;
    if xi >= XI_SPLIT {
        if level >= MAX_BISECTION_DEPTH {
            return Err(Error::Configuration(format!(
                "Dyson–Phillips bisection exceeded depth {MAX_BISECTION_DEPTH} on [{s}, {t}] (ξ = {xi})"
            )));
        }
        let r = 0.5 * (s + t);
        let (lo, e_lo) = sum_on(engine, s, r, 0.5 * eps, quad, level + 1, pieces, max_depth)?;
        let (hi, e_hi) = sum_on(engine, r, t, 0.5 * eps, quad, level + 1, pieces, max_depth)?;
        // ‖XY − X'Y'‖₁ ≤ ‖X − X'‖₁‖Y‖ + ‖X'‖‖Y − Y'‖₁ with contractions X', Y
        return Ok((hi * lo, e_hi + (1.0 + e_hi) * e_lo));
    }
    let depth = series_depth(xi, eps);
    let levels = engine.converged_levels(s, t, depth, quad)?;
    let d = engine.lambdas.len();
    let sum = levels
        .iter()
        .fold(DMatrix::<f64>::zeros(d, d), |acc, l| acc + l);
    *pieces += 1;
    *max_depth = (*max_depth).max(depth);
    let tail = if xi == 0.0 { 0.0 } else { tail_bound(xi, depth) };
    Ok((sum, tail))
}
