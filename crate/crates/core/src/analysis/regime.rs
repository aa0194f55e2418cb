use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which operator-norm rate applies to a declared `(α, β)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    /// `ε(n) = n^{-(β−α)}`, for `β > α`.
    GeneralBetaGtAlpha,
    /// `ε(n) = n^{-(1−α)}`, for `β = 1`, `α > 1/2`.
    LipschitzHalfOne,
    /// `ε(n) = ln(n)/n`, for `β = 1`.
    LipschitzHilbertLog,
    /// `ε(n) = n^{-β}`, for `β > 2α − 1 > 0`.
    BetaGt2AlphaMinus1,
}

impl RegimeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeKind::GeneralBetaGtAlpha => "general_beta_gt_alpha",
            RegimeKind::LipschitzHalfOne => "lipschitz_half_one",
            RegimeKind::LipschitzHilbertLog => "lipschitz_hilbert_log",
            RegimeKind::BetaGt2AlphaMinus1 => "beta_gt_2alpha_minus_1",
        }
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rate regime together with the exponents that parametrize it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegime {
    pub kind: RegimeKind,
    pub alpha: f64,
    pub beta: f64,
}

impl RateRegime {
    /// `ε(n)`, or `None` where the formula is undefined (`n = 0`, and `n = 1` for the
    /// logarithmic rate, which vanishes there).
    pub fn epsilon(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        Some(match self.kind {
            RegimeKind::GeneralBetaGtAlpha => nf.powf(-(self.beta - self.alpha)),
            RegimeKind::LipschitzHalfOne => nf.powf(-(1.0 - self.alpha)),
            RegimeKind::BetaGt2AlphaMinus1 => nf.powf(-self.beta),
            RegimeKind::LipschitzHilbertLog => {
                if n < 2 {
                    return None;
                }
                nf.ln() / nf
            }
        })
    }

    /// Exponent `p` such that `ε(n) ≈ n^{-p}` up to logarithms.
    pub fn exponent(&self) -> f64 {
        match self.kind {
            RegimeKind::GeneralBetaGtAlpha => self.beta - self.alpha,
            RegimeKind::LipschitzHalfOne => 1.0 - self.alpha,
            RegimeKind::BetaGt2AlphaMinus1 => self.beta,
            RegimeKind::LipschitzHilbertLog => 1.0,
        }
    }
}

fn check_exponents(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Argument(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// Headline regime: the logarithmic rate when `β = 1`, then `n^{-β}`, then `n^{-(β−α)}`.
///
/// Pairs with no known bound yield [`Error::NoKnownBound`].
pub fn select_regime(alpha: f64, beta: f64) -> Result<RateRegime> {
    check_exponents(alpha, beta)?;
    let kind = if beta == 1.0 {
        RegimeKind::LipschitzHilbertLog
    } else if 2.0 * alpha - 1.0 > 0.0 && beta > 2.0 * alpha - 1.0 {
        RegimeKind::BetaGt2AlphaMinus1
    } else if beta > alpha {
        RegimeKind::GeneralBetaGtAlpha
    } else {
        return Err(Error::NoKnownBound { alpha, beta });
    };
    Ok(RateRegime { kind, alpha, beta })
}

/// Every regime whose hypotheses hold for `(α, β)`, headline first.
pub fn applicable_regimes(alpha: f64, beta: f64) -> Result<Vec<RateRegime>> {
    check_exponents(alpha, beta)?;
    let mut kinds = Vec::new();
    if beta == 1.0 {
        kinds.push(RegimeKind::LipschitzHilbertLog);
        if alpha > 0.5 {
            kinds.push(RegimeKind::LipschitzHalfOne);
        }
    } else {
        if 2.0 * alpha - 1.0 > 0.0 && beta > 2.0 * alpha - 1.0 {
            kinds.push(RegimeKind::BetaGt2AlphaMinus1);
        }
        if beta > alpha {
            kinds.push(RegimeKind::GeneralBetaGtAlpha);
        }
    }
    Ok(kinds.into_iter().map(|kind| RateRegime { kind, alpha, beta }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lipschitz_selects_log_rate() {
        let r = select_regime(0.6, 1.0).unwrap();
        assert_eq!(r.kind, RegimeKind::LipschitzHilbertLog);
        assert_abs_diff_eq!(r.epsilon(10).unwrap(), 0.2303, epsilon = 1e-4);
        assert_eq!(r.epsilon(1), None);
    }

    #[test]
    fn beta_above_two_alpha_minus_one() {
        let r = select_regime(0.6, 0.5).unwrap();
        assert_eq!(r.kind, RegimeKind::BetaGt2AlphaMinus1);
        assert_abs_diff_eq!(r.epsilon(16).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn general_regime() {
        let r = select_regime(0.2, 0.5).unwrap();
        assert_eq!(r.kind, RegimeKind::GeneralBetaGtAlpha);
        assert_abs_diff_eq!(r.epsilon(32).unwrap(), 32f64.powf(-0.3), epsilon = 1e-15);
    }

    #[test]
    fn no_known_bound_is_explicit() {
        assert!(matches!(select_regime(0.5, 0.3), Err(Error::NoKnownBound { .. })));
        assert!(matches!(select_regime(0.9, 0.7), Err(Error::NoKnownBound { .. })));
        assert!(applicable_regimes(0.5, 0.3).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_exponents() {
        assert!(matches!(select_regime(1.0, 0.5), Err(Error::Argument(_))));
        assert!(matches!(select_regime(0.2, 0.0), Err(Error::Argument(_))));
        assert!(matches!(select_regime(0.2, 1.5), Err(Error::Argument(_))));
    }

    #[test]
    fn applicable_lists() {
        let kinds = |a, b| -> Vec<RegimeKind> {
            applicable_regimes(a, b).unwrap().iter().map(|r| r.kind).collect()
        };
        assert_eq!(
            kinds(0.7, 1.0),
            vec![RegimeKind::LipschitzHilbertLog, RegimeKind::LipschitzHalfOne]
        );
        assert_eq!(kinds(0.3, 1.0), vec![RegimeKind::LipschitzHilbertLog]);
        assert_eq!(
            kinds(0.6, 0.7),
            vec![RegimeKind::BetaGt2AlphaMinus1, RegimeKind::GeneralBetaGtAlpha]
        );
        assert_eq!(kinds(0.6, 0.5), vec![RegimeKind::BetaGt2AlphaMinus1]);
        assert_eq!(kinds(0.2, 0.5), vec![RegimeKind::GeneralBetaGtAlpha]);
        for (a, b) in [(0.7, 1.0), (0.6, 0.5), (0.2, 0.5), (0.0, 0.3)] {
            assert_eq!(applicable_regimes(a, b).unwrap()[0], select_regime(a, b).unwrap());
        }
    }

    #[test]
    fn power_rates_strictly_decrease() {
        for (a, b) in [(0.2, 0.5), (0.6, 0.5), (0.0, 0.1)] {
            let r = select_regime(a, b).unwrap();
            for n in 1..200 {
                assert!(r.epsilon(n + 1).unwrap() < r.epsilon(n).unwrap());
            }
        }
        // ln(n)/n peaks at n = e, so it decreases from n = 3 onward
        let r = select_regime(0.0, 1.0).unwrap();
        for n in 3..200 {
            assert!(r.epsilon(n + 1).unwrap() < r.epsilon(n).unwrap());
        }
        assert!(r.epsilon(1 << 30).unwrap() < 1e-7);
    }
}
