//! Constants estimation, rate regimes, convergence experiments and the
//! inequality verifiers behind the trace-norm lifting argument.

mod axioms;
mod constants;
mod convergence;
mod fit;
mod lemma;
mod lifting;
mod regime;

pub use axioms::{sample_triples, verify_evolution_axioms, verify_reference_axioms, AxiomsCheck};
pub use constants::{contraction_coefficient, estimate_constants, ConstantsReport, DEFAULT_GRID};
pub use convergence::{
    is_nonincreasing, run_convergence, run_convergence_against, run_convergence_with,
    ConvergenceOptions, ConvergenceReport, OracleKind, TrainSplit, BOUND_SLACK, EXACT_FLOOR,
};
pub use fit::{fit_rate, RateFit};
pub use lemma::{lemma21_ensemble, random_instance, verify_lemma21, Lemma21Check, Lemma21Summary};
pub use lifting::{lifting_check, verify_lifting, LiftingCheck, LiftingOracle};
pub use regime::{applicable_regimes, select_regime, RateRegime, RegimeKind};
