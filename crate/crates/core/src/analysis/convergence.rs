use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{op_and_trace_norm, GeneralOperator};
use crate::propagator::{exact_or_reference, product_approximant, Method, Scheme};

use super::fit::{fit_rate, RateFit};
use super::regime::{applicable_regimes, select_regime, RateRegime};

/// Errors at or below this level count as exact reproduction.
pub const EXACT_FLOOR: f64 = 1e-12;

/// Default relative slack of the train/test bound check.
pub const BOUND_SLACK: f64 = 0.1;

/// Which part of `n_list` the prefactor is fitted on; the remainder is the test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n_max", rename_all = "snake_case")]
pub enum TrainSplit {
    FirstHalf,
    UpTo(usize),
}

impl TrainSplit {
    fn is_train(&self, index: usize, n: usize, len: usize) -> bool {
        match *self {
            TrainSplit::FirstHalf => index < len / 2,
            TrainSplit::UpTo(n_max) => n <= n_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub tol_ref: f64,
    pub train: TrainSplit,
    pub slack: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { tol_ref: 1e-10, train: TrainSplit::FirstHalf, slack: BOUND_SLACK }
    }
}

/// Where the comparison propagator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    Reference { tol: f64, achieved: f64 },
    Supplied { budget: f64 },
}

impl OracleKind {
    /// Error budget of the oracle itself in trace norm.
    pub fn budget(&self) -> f64 {
        match *self {
            OracleKind::Exact => 0.0,
            OracleKind::Reference { achieved, .. } => achieved,
            OracleKind::Supplied { budget } => budget,
        }
    }
}

/// Errors of one product scheme over a list of step counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub scheme: Scheme,
    pub s: f64,
    pub t: f64,
    pub n_list: Vec<usize>,
    pub err_op: Vec<f64>,
    pub err_tr: Vec<f64>,
    /// Headline `ε(n)`; `None` where undefined or when no regime applies.
    pub epsilon: Vec<Option<f64>>,
    pub fit: Option<RateFit>,
    pub fitted_slope: Option<f64>,
    /// `max_n err_tr(n)/ε(n)` over the whole list.
    pub fitted_prefactor: Option<f64>,
    /// Same maximum restricted to the training set.
    pub train_prefactor: Option<f64>,
    pub regime: Option<RateRegime>,
    pub applicable: Vec<RateRegime>,
    /// Whether every test point satisfies `err_tr ≤ (1 + slack)·train_prefactor·ε`.
    pub bound_satisfied: Option<bool>,
    pub exact_reproduction: bool,
    pub oracle: OracleKind,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    /// Pointwise `err_op ≤ err_tr + 1e-12`.
    pub fn norm_ordering_holds(&self) -> bool {
        self.err_op.iter().zip(&self.err_tr).all(|(o, t)| *o <= *t + 1e-12)
    }

    /// `err_tr / ε(n)` at every point.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.err_tr
            .iter()
            .zip(&self.epsilon)
            .map(|(e, eps)| eps.map(|x| e / x))
            .collect()
    }
}

/// Non-increasing up to an absolute `jitter`.
pub fn is_nonincreasing(values: &[f64], jitter: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + jitter)
}

/// Convergence run with default options and the given reference tolerance.
pub fn run_convergence(
    m: &Model,
    scheme: Scheme,
    s: f64,
    t: f64,
    n_list: &[usize],
    tol_ref: f64,
) -> Result<ConvergenceReport> {
    let opts = ConvergenceOptions { tol_ref, ..ConvergenceOptions::default() };
    run_convergence_with(m, scheme, s, t, n_list, &opts)
}

/// Convergence run against the closed form when available, else the reference propagator.
pub fn run_convergence_with(
    m: &Model,
    scheme: Scheme,
    s: f64,
    t: f64,
    n_list: &[usize],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    check_n_list(n_list)?;
    m.check_interval(s, t)?;
    let oracle = exact_or_reference(m, s, t, opts.tol_ref)?;
    let kind = match oracle.method {
        Method::Reference { tol, achieved, .. } => OracleKind::Reference { tol, achieved },
        _ => OracleKind::Exact,
    };
    run_convergence_against(m, scheme, s, t, n_list, &oracle.u, kind, opts)
}

/// Convergence run against a precomputed `U(t, s)`, so several schemes can share one oracle.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence_against(
    m: &Model,
    scheme: Scheme,
    s: f64,
    t: f64,
    n_list: &[usize],
    oracle: &GeneralOperator,
    oracle_kind: OracleKind,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    check_n_list(n_list)?;
    m.check_interval(s, t)?;
    if oracle.dim() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), found: oracle.dim() });
    }

    let norms = n_list
        .par_iter()
        .map(|&n| {
            let u = product_approximant(scheme, m, s, t, n)?.u;
            op_and_trace_norm(&(&u - oracle))
        })
        .collect::<Result<Vec<_>>>()?;
    let (err_op, err_tr): (Vec<f64>, Vec<f64>) = norms.into_iter().unzip();

    let mut warnings = Vec::new();
    let (regime, applicable) = match select_regime(m.alpha(), m.beta()) {
        Ok(r) => (Some(r), applicable_regimes(m.alpha(), m.beta())?),
        Err(e @ Error::NoKnownBound { .. }) => {
            warnings.push(e.to_string());
            (None, Vec::new())
        }
        Err(e) => return Err(e),
    };
    let epsilon: Vec<Option<f64>> = n_list
        .iter()
        .map(|&n| regime.and_then(|r| r.epsilon(n)))
        .collect();

    let exact_reproduction = err_tr.iter().all(|&e| e <= EXACT_FLOOR);
    let budget = oracle_kind.budget();
    if !exact_reproduction {
        let smallest = err_tr.iter().copied().filter(|&e| e > EXACT_FLOOR).fold(f64::INFINITY, f64::min);
        if budget > 0.0 && smallest < 100.0 * budget {
            warnings.push(format!(
                "smallest error {smallest:.3e} is within 100x of the oracle budget {budget:.3e}"
            ));
        }
    }

    let fit = if exact_reproduction { None } else { Some(fit_rate(n_list, &err_tr)?) };

    let ratio_max = |keep: &dyn Fn(usize) -> bool| -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, (e, eps)) in err_tr.iter().zip(&epsilon).enumerate() {
            if let (true, Some(x)) = (keep(i), eps) {
                let r = e / x;
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
        }
        best
    };
    let len = n_list.len();
    let is_train = |i: usize| opts.train.is_train(i, n_list[i], len);
    let fitted_prefactor = ratio_max(&|_| true);
    let train_prefactor = ratio_max(&is_train);

    let bound_satisfied = if exact_reproduction {
        Some(true)
    } else {
        match train_prefactor {
            None => None,
            Some(c) => {
                let tests: Vec<bool> = (0..len)
                    .filter(|&i| !is_train(i))
                    .filter_map(|i| epsilon[i].map(|x| err_tr[i] <= (1.0 + opts.slack) * c * x))
                    .collect();
                if tests.is_empty() {
                    warnings.push("train/test split leaves no test points".into());
                    None
                } else {
                    Some(tests.into_iter().all(|ok| ok))
                }
            }
        }
    };

    Ok(ConvergenceReport {
        model: m.descriptor().to_string(),
        scheme,
        s,
        t,
        n_list: n_list.to_vec(),
        err_op,
        err_tr,
        epsilon,
        fitted_slope: fit.as_ref().map(|f| f.slope),
        fit,
        fitted_prefactor,
        train_prefactor,
        regime,
        applicable,
        bound_satisfied,
        exact_reproduction,
        oracle: oracle_kind,
        warnings,
    })
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 3 {
        return Err(Error::Fit(format!("n_list needs at least 3 entries, got {}", n_list.len())));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(format!(
            "n_list must be strictly ascending and positive, got {n_list:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{commuting_lipschitz, Profile};
    use approx::assert_abs_diff_eq;

    fn doubling(lo: u32, hi: u32) -> Vec<usize> {
        (lo..=hi).map(|k| 1usize << k).collect()
    }

    #[test]
    fn unperturbed_flags_exact_reproduction() {
        let m = Model::commuting(&[1.0, 2.0, 3.0], &[0.0; 3], Profile::zero(), 1.0).unwrap();
        let r = run_convergence(&m, Scheme::Left, 0.0, 1.0, &doubling(1, 5), 1e-10).unwrap();
        assert!(r.exact_reproduction);
        assert!(r.fitted_slope.is_none());
        assert!(r.err_tr.iter().all(|&e| e <= EXACT_FLOOR));
    }

    #[test]
    fn scalar_left_matches_closed_form() {
        let m = Model::scalar(1.0, Profile::Linear { offset: 0.0, slope: 1.0 }, 1.0).unwrap();
        let ns = doubling(3, 10);
        let r = run_convergence(&m, Scheme::Left, 0.0, 1.0, &ns, 1e-10).unwrap();
        for (&n, &e) in ns.iter().zip(&r.err_tr) {
            let nf = n as f64;
            let oracle = (-1.5f64).exp() * (0.5 / nf).exp_m1();
            assert_abs_diff_eq!(e, oracle, epsilon = 1e-12);
        }
        let slope = r.fitted_slope.unwrap();
        assert!((-1.05..=-0.95).contains(&slope), "{slope}");
        assert_eq!(r.oracle, OracleKind::Exact);
        assert!(r.norm_ordering_holds());
        assert_eq!(r.bound_satisfied, Some(true));
    }

    #[test]
    fn commuting_rates_and_monotonicity() {
        let m = commuting_lipschitz(4).unwrap();
        for scheme in Scheme::ALL {
            let r = run_convergence(&m, scheme, 0.0, 1.0, &doubling(3, 7), 1e-10).unwrap();
            assert!(is_nonincreasing(&r.err_tr, 1e-12), "{scheme}: {:?}", r.err_tr);
            assert!(r.fitted_slope.unwrap() <= -0.9);
        }
    }

    #[test]
    fn prefactor_protocol() {
        let m = commuting_lipschitz(3).unwrap();
        let ns = doubling(2, 7);
        let opts = ConvergenceOptions { train: TrainSplit::UpTo(16), ..Default::default() };
        let r = run_convergence_with(&m, Scheme::Left, 0.0, 1.0, &ns, &opts).unwrap();
        let ratios: Vec<f64> = r.ratios().into_iter().map(Option::unwrap).collect();
        let train = ratios[..3].iter().copied().fold(0.0, f64::max);
        assert_abs_diff_eq!(r.train_prefactor.unwrap(), train, epsilon = 0.0);
        assert_abs_diff_eq!(
            r.fitted_prefactor.unwrap(),
            ratios.iter().copied().fold(0.0, f64::max),
            epsilon = 0.0
        );
        let expected = ratios[3..].iter().all(|&q| q <= 1.1 * train);
        assert_eq!(r.bound_satisfied, Some(expected));
    }

    #[test]
    fn no_known_bound_is_reported() {
        let m = Model::commuting(
            &[1.0, 2.0],
            &[1.0, 0.5],
            Profile::Holder { offset: 1.0, scale: 1.0, center: 0.5, exponent: 0.3 },
            0.3,
        )
        .unwrap()
        .with_alpha(0.5)
        .unwrap();
        let r = run_convergence(&m, Scheme::Left, 0.0, 1.0, &doubling(2, 5), 1e-10).unwrap();
        assert!(r.regime.is_none());
        assert!(r.epsilon.iter().all(Option::is_none));
        assert_eq!(r.bound_satisfied, None);
        assert!(r.warnings.iter().any(|w| w.contains("no known")));
    }

    #[test]
    fn rejects_short_or_unsorted_lists() {
        let m = commuting_lipschitz(2).unwrap();
        assert!(matches!(
            run_convergence(&m, Scheme::Left, 0.0, 1.0, &[4, 8], 1e-10),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            run_convergence(&m, Scheme::Left, 0.0, 1.0, &[8, 4, 16], 1e-10),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn monotone_helper() {
        assert!(is_nonincreasing(&[3.0, 2.0, 2.0 + 1e-13, 1.0], 1e-12));
        assert!(!is_nonincreasing(&[3.0, 2.0, 2.1], 1e-12));
    }
}
