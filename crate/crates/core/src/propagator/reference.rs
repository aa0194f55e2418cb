//! High-accuracy reference propagator.
//!
//! Each step is the fourth-order commutator-free exponential integrator
//!
//! ```text
//! U(a+h, a) ≈ exp(-h(w₁C₁ + w₂C₂)) · exp(-h(w₂C₁ + w₁C₂)),   C_i = A + B(a + c_i h)
//! ```
//!
//! with two-point Gauss nodes `c_{1,2} = 1/2 ∓ √3/6` and weights
//! `w_{1,2} = 1/4 ∓ √3/6`. Both exponents are symmetric, so the exponentials are
//! evaluated spectrally. The interval is cut at the non-smooth points of `B(·)`
//! and meshes are graded polynomially toward them, which restores the
//! fourth-order error expansion for Hölder envelopes `|t − t0|^β`. Step counts
//! double until two successive solutions agree, and the Richardson combination
//! `(16·U_2N − U_N)/15` is returned.

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{GeneralOperator, HermitianOperator};

use super::{dyson_phillips_sum, Method, PropagatorResult};

/// Hard cap on steps per smooth piece.
pub const MAX_REFERENCE_STEPS: usize = 1 << 20;

const INITIAL_STEPS: usize = 8;
const GRADING_EXPONENT: i32 = 4;
const MIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Grading {
    Uniform,
    TowardStart,
    TowardEnd,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    grading: Grading,
}

impl Piece {
    fn mesh(&self, n: usize) -> Vec<f64> {
        let len = self.b - self.a;
        (0..=n)
            .map(|j| {
                if j == n {
                    return self.b;
                }
                let u = j as f64 / n as f64;
                match self.grading {
                    Grading::Uniform => self.a + len * u,
                    Grading::TowardStart => self.a + len * u.powi(GRADING_EXPONENT),
                    Grading::TowardEnd => self.b - len * (1.0 - u).powi(GRADING_EXPONENT),
                }
            })
            .collect()
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-14 * (1.0 + x.abs())
}

/// A kink outside a piece but within this fraction of its length still grades the
/// mesh toward the closer end; the singular derivatives are felt there all the same.
const NEAR_KINK: f64 = 0.25;

fn pieces(m: &Model, s: f64, t: f64) -> Vec<Piece> {
    let kinks = m.perturbation().breakpoints();
    let mut cuts = vec![s];
    let mut inner: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|&k| k > s && k < t && !near(k, s) && !near(k, t))
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(t);

    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let is_kink = |x: f64| {
            kinks.iter().any(|&k| {
                near(k, x) || ((k <= a || k >= b) && (k - x).abs() <= NEAR_KINK * (b - a))
            })
        };
        match (is_kink(a), is_kink(b)) {
            (false, false) => out.push(Piece {
                a,
                b,
                grading: Grading::Uniform,
            }),
            (true, false) => out.push(Piece {
                a,
                b,
                grading: Grading::TowardStart,
            }),
            (false, true) => out.push(Piece {
                a,
                b,
                grading: Grading::TowardEnd,
            }),
            (true, true) => {
                let mid = 0.5 * (a + b);
                out.push(Piece {
                    a,
                    b: mid,
                    grading: Grading::TowardStart,
                });
                out.push(Piece {
                    a: mid,
                    b,
                    grading: Grading::TowardEnd,
                });
            }
        }
    }
    out
}

struct Stepper<'a> {
    model: &'a Model,
    a_op: &'a HermitianOperator,
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3 / 6

impl Stepper<'_> {
    fn step(&self, a: f64, b: f64) -> Result<GeneralOperator> {
        let h = b - a;
        let (c1, c2) = (0.5 - SQRT3_6, 0.5 + SQRT3_6);
        let (w1, w2) = (0.25 - SQRT3_6, 0.25 + SQRT3_6);
        let b1 = self.model.evaluate_perturbation(a + c1 * h)?;
        let b2 = self.model.evaluate_perturbation(a + c2 * h)?;
        let half_a = self.a_op.matrix() * 0.5;
        let early = HermitianOperator::new(&half_a + b1.matrix() * w2 + b2.matrix() * w1)?;
        let late = HermitianOperator::new(&half_a + b1.matrix() * w1 + b2.matrix() * w2)?;
        Ok(&late.exp_neg(h)? * &early.exp_neg(h)?)
    }

    fn march(&self, piece: &Piece, n: usize) -> Result<GeneralOperator> {
        let mesh = piece.mesh(n);
        let mut u = GeneralOperator::identity(self.model.dim());
        for w in mesh.windows(2) {
            u = &self.step(w[0], w[1])? * &u;
        }
        Ok(u)
    }

    fn converge(&self, piece: &Piece, tol: f64) -> Result<(GeneralOperator, usize, f64)> {
        let mut n = INITIAL_STEPS;
        let mut coarse = self.march(piece, n)?;
        loop {
            let fine = self.march(piece, 2 * n)?;
            let diff = (&fine - &coarse).trace_norm()?;
            if diff <= 0.5 * tol {
                let extrapolated = (&fine.scaled(16.0) - &coarse).scaled(1.0 / 15.0);
                return Ok((extrapolated, 2 * n, diff / 15.0));
            }
            n *= 2;
            if 2 * n > MAX_REFERENCE_STEPS {
                return Err(Error::Accuracy {
                    what: format!("reference propagator on [{}, {}]", piece.a, piece.b),
                    achieved: diff,
                    requested: tol,
                });
            }
            coarse = fine;
        }
    }
}

/// High-accuracy `U(t, s)` with trace-norm tolerance `tol` (at least `1e-12`).
///
/// `s == t` yields the identity.
pub fn reference_propagator(m: &Model, s: f64, t: f64, tol: f64) -> Result<PropagatorResult> {
    m.check_interval(s, t)?;
    if !(tol >= MIN_TOL) {
        return Err(Error::Argument(format!(
            "reference tolerance must be at least {MIN_TOL:e}, got {tol:e}"
        )));
    }
    let dim = m.dim();
    if s == t {
        return Ok(PropagatorResult {
            u: GeneralOperator::identity(dim),
            s,
            t,
            method: Method::Reference {
                tol,
                steps: 0,
                achieved: 0.0,
            },
            tail_bound: None,
        });
    }
    let stepper = Stepper {
        model: m,
        a_op: m.generator().op(),
    };
    let parts = pieces(m, s, t);
    let piece_tol = tol / parts.len() as f64;
    let mut u = GeneralOperator::identity(dim);
    let mut steps = 0;
    let mut achieved = 0.0;
    for piece in &parts {
        let (p, n, est) = stepper.converge(piece, piece_tol)?;
        u = &p * &u;
        steps += n;
        achieved += est;
    }
    Ok(PropagatorResult {
        u,
        s,
        t,
        method: Method::Reference {
            tol,
            steps,
            achieved,
        },
        tail_bound: None,
    })
}

/// Trace-norm distance between the reference propagator and the Dyson–Phillips
/// sum on `[s, t]`, or `None` when the contraction coefficient exceeds `1/2` and the
/// series is not trusted on this interval.
pub fn cross_validate_reference(m: &Model, s: f64, t: f64, tol: f64) -> Result<Option<f64>> {
    let xi = crate::analysis::contraction_coefficient(m, s, t, crate::analysis::DEFAULT_GRID)?;
    if xi > 0.5 {
        return Ok(None);
    }
    let reference = reference_propagator(m, s, t, tol)?;
    let series = dyson_phillips_sum(m, s, t, tol)?;
    Ok(Some((&reference.u - &series.u).trace_norm()?))
}
