use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::GeneralOperator;
use crate::propagator::{exact_or_reference, Partition, ProductBuilder, Scheme};

/// Midpoint split of a product approximant.
///
/// With `P_hi` the factors `k_n+1..n`, `P_lo` the factors `1..k_n` and `r = (s+t)/2`:
///
/// ```text
/// ‖P_hi P_lo − U(t,s)‖₁ ≤ ‖P_hi − U(t,r)‖·‖P_lo‖₁ + ‖U(t,r)‖₁·‖P_lo − U(r,s)‖
/// ```
///
/// `U(t,s)` is taken as `U(t,r)U(r,s)` so a numerical oracle's cocycle defect does not
/// enter the comparison; that defect is reported on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftingCheck {
    pub scheme: Scheme,
    pub n: usize,
    pub k_n: usize,
    pub lhs: f64,
    /// `(‖P_hi − U(t,r)‖, ‖P_lo − U(r,s)‖)`
    pub half_op_errors: (f64, f64),
    /// `(‖P_lo‖₁, ‖U(t,r)‖₁)`
    pub half_tr_norms: (f64, f64),
    pub rhs: f64,
    /// `‖e^{-(t−s)A/2}‖₁`
    pub c_ts: f64,
    /// `rhs − lhs`
    pub margin: f64,
    /// `‖U(t,s) − U(t,r)U(r,s)‖₁` of the oracles themselves.
    pub oracle_defect: f64,
}

impl LiftingCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-10
    }
}

/// Oracle propagators over `[s, t]` and its two halves, reusable across schemes and `n`.
#[derive(Debug, Clone)]
pub struct LiftingOracle {
    pub s: f64,
    pub t: f64,
    pub mid: f64,
    pub whole: GeneralOperator,
    pub upper: GeneralOperator,
    pub lower: GeneralOperator,
    pub c_ts: f64,
    pub oracle_defect: f64,
    /// `U(t,r)U(r,s)`, the whole-interval propagator the decomposition is measured against.
    pub composed: GeneralOperator,
}

impl LiftingOracle {
    pub fn new(m: &Model, s: f64, t: f64, tol_ref: f64) -> Result<Self> {
        m.check_interval(s, t)?;
        if !(s < t) {
            return Err(Error::Ordering { s, t });
        }
        let mid = 0.5 * (s + t);
        let whole = exact_or_reference(m, s, t, tol_ref)?.u;
        let upper = exact_or_reference(m, mid, t, tol_ref)?.u;
        let lower = exact_or_reference(m, s, mid, tol_ref)?.u;
        let c_ts = m.generator().heat_kernel(0.5 * (t - s))?.to_general().trace_norm()?;
        let composed = &upper * &lower;
        let oracle_defect = (&whole - &composed).trace_norm()?;
        Ok(Self { s, t, mid, whole, upper, lower, c_ts, oracle_defect, composed })
    }
}

/// Evaluates both sides of the split inequality for one scheme and even `n ≥ 4`.
pub fn lifting_check(
    m: &Model,
    oracle: &LiftingOracle,
    scheme: Scheme,
    n: usize,
) -> Result<LiftingCheck> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Argument(format!("lifting needs an even n >= 4, got {n}")));
    }
    let partition = Partition::new(oracle.s, oracle.t, n)?;
    let k_n = n / 2;
    let builder = ProductBuilder::new(m, scheme, partition.step())?;
    let (lo_points, hi_points) = partition.points().split_at(k_n);
    let p_lo = builder.ordered_product(lo_points)?;
    let p_hi = builder.ordered_product(hi_points)?;

    let lhs = (&(&p_hi * &p_lo) - &oracle.composed).trace_norm()?;
    let e_hi = (&p_hi - &oracle.upper).op_norm()?;
    let e_lo = (&p_lo - &oracle.lower).op_norm()?;
    let p_lo_tr = p_lo.trace_norm()?;
    let upper_tr = oracle.upper.trace_norm()?;
    let rhs = e_hi * p_lo_tr + upper_tr * e_lo;
    Ok(LiftingCheck {
        scheme,
        n,
        k_n,
        lhs,
        half_op_errors: (e_hi, e_lo),
        half_tr_norms: (p_lo_tr, upper_tr),
        rhs,
        c_ts: oracle.c_ts,
        margin: rhs - lhs,
        oracle_defect: oracle.oracle_defect,
    })
}

/// One-shot lifting check computing its own oracles.
pub fn verify_lifting(
    m: &Model,
    scheme: Scheme,
    s: f64,
    t: f64,
    n: usize,
    tol_ref: f64,
) -> Result<LiftingCheck> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Argument(format!("lifting needs an even n >= 4, got {n}")));
    }
    let oracle = LiftingOracle::new(m, s, t, tol_ref)?;
    lifting_check(m, &oracle, scheme, n)
}
