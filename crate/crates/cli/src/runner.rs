use std::time::Instant;

use gibbsflow::analysis::{
    estimate_constants, lemma21_ensemble, lifting_check, run_convergence_against, sample_triples,
    verify_evolution_axioms, AxiomsCheck, ConstantsReport, ConvergenceOptions, ConvergenceReport,
    Lemma21Summary, LiftingCheck, LiftingOracle, OracleKind, TrainSplit,
};
use gibbsflow::model::Model;
use gibbsflow::propagator::{exact_or_reference, Method};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Which group of sub-reports to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Constants, convergence reports and lifting checks.
    Run,
    /// Randomized and deterministic property suites.
    Verify,
    /// Constants only.
    Constants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Validation,
    Numerical,
}

/// A sub-task that did not produce its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub task: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub task: String,
    pub seconds: f64,
}

/// Everything one invocation produced, together with the configuration behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub constants: Option<ConstantsReport>,
    pub convergence: Vec<ConvergenceReport>,
    pub lifting: Vec<LiftingCheck>,
    pub lemma21: Option<Lemma21Summary>,
    pub axioms: Option<AxiomsCheck>,
    pub failures: Vec<Failure>,
    pub timings: Vec<Timing>,
}

impl ReportEnvelope {
    fn new(command: Command, config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config: config.clone(),
            constants: None,
            convergence: Vec::new(),
            lifting: Vec::new(),
            lemma21: None,
            axioms: None,
            failures: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Process exit code implied by the recorded failures.
    pub fn exit_code(&self) -> i32 {
        if self.failures.iter().any(|f| f.kind == FailureKind::Numerical) {
            2
        } else if self.failures.is_empty() {
            0
        } else {
            1
        }
    }

    fn attempt<T>(
        &mut self,
        task: &str,
        f: impl FnOnce() -> gibbsflow::Result<T>,
    ) -> Option<T> {
        let start = Instant::now();
        let out = match f() {
            Ok(v) => Some(v),
            Err(e) => {
                let kind = if e.is_numerical() { FailureKind::Numerical } else { FailureKind::Validation };
                self.failures.push(Failure { task: task.to_string(), kind, message: e.to_string() });
                None
            }
        };
        if self.config.timings {
            self.timings.push(Timing { task: task.to_string(), seconds: start.elapsed().as_secs_f64() });
        }
        out
    }
}

/// Runs every sub-report `command` enables. Invalid configurations fail up front;
/// failures of individual sub-tasks are recorded in the envelope instead.
pub fn run(config: &ExperimentConfig, command: Command) -> Result<ReportEnvelope, CliError> {
    let model = config.build_model()?;
    let mut env = ReportEnvelope::new(command, config);
    let (s, t) = (config.s, config.t);

    if matches!(command, Command::Run | Command::Constants) {
        env.constants = env.attempt("constants", || estimate_constants(&model, s, t, config.grid));
    }
    if command == Command::Run {
        run_convergence_reports(&mut env, &model, config);
    }
    if matches!(command, Command::Run | Command::Verify) && config.lifting.enabled {
        run_lifting(&mut env, &model, config);
    }
    if command == Command::Verify {
        let v = config.verify.clone();
        env.lemma21 = env.attempt("lemma21", || {
            lemma21_ensemble(config.seed, v.lemma21_instances, v.lemma21_max_dim, v.lemma21_max_factors)
        });
        let triples = sample_triples(config.seed, v.triples, model.horizon());
        env.axioms = env.attempt("axioms", || verify_evolution_axioms(&model, &triples, config.tol_ref));
    }
    Ok(env)
}

fn run_convergence_reports(env: &mut ReportEnvelope, model: &Model, config: &ExperimentConfig) {
    let (s, t) = (config.s, config.t);
    let Some(oracle) = env.attempt("oracle", || exact_or_reference(model, s, t, config.tol_ref)) else {
        return;
    };
    let kind = match oracle.method {
        Method::Reference { tol, achieved, .. } => OracleKind::Reference { tol, achieved },
        _ => OracleKind::Exact,
    };
    let opts = ConvergenceOptions {
        tol_ref: config.tol_ref,
        train: config.train_n_max.map_or(TrainSplit::FirstHalf, TrainSplit::UpTo),
        ..ConvergenceOptions::default()
    };
    let ns = config.n_list.values();
    for scheme in config.schemes() {
        let task = format!("convergence/{scheme}");
        if let Some(r) = env.attempt(&task, || {
            run_convergence_against(model, scheme, s, t, &ns, &oracle.u, kind.clone(), &opts)
        }) {
            env.convergence.push(r);
        }
    }
}

fn run_lifting(env: &mut ReportEnvelope, model: &Model, config: &ExperimentConfig) {
    let Some(oracle) = env.attempt("lifting/oracle", || {
        LiftingOracle::new(model, config.s, config.t, config.tol_ref)
    }) else {
        return;
    };
    for scheme in config.lifting_schemes() {
        for &n in &config.lifting.n_list {
            let task = format!("lifting/{scheme}/{n}");
            if let Some(c) = env.attempt(&task, || lifting_check(model, &oracle, scheme, n)) {
                env.lifting.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn scalar_run_has_unit_slope() {
        let cfg = parse_config("n_list = [8, 16, 32, 64]\nscheme = \"left\"\n[model]\nfamily = \"scalar\"\n")
            .unwrap();
        let env = run(&cfg, Command::Run).unwrap();
        assert_eq!(env.convergence.len(), 1);
        let slope = env.convergence[0].fitted_slope.unwrap();
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
        assert_eq!(env.exit_code(), 0);
        assert_eq!(env.lifting.len(), 8);
        assert!(env.constants.is_some());
    }

    #[test]
    fn unperturbed_run_flags_exact_reproduction() {
        let cfg = parse_config(
            "n_list = [2, 4, 8]\n[model]\nfamily = \"commuting\"\ndim = 3\nd0 = [0.0, 0.0, 0.0]\n",
        )
        .unwrap();
        let env = run(&cfg, Command::Run).unwrap();
        assert_eq!(env.convergence.len(), 3);
        for r in &env.convergence {
            assert!(r.exact_reproduction);
            assert!(r.err_tr.iter().all(|&e| e <= 1e-12));
        }
    }

    #[test]
    fn short_n_list_is_recorded_as_failure() {
        let cfg = parse_config("n_list = [8, 16]\nscheme = \"left\"\n[model]\nfamily = \"scalar\"\n").unwrap();
        let env = run(&cfg, Command::Run).unwrap();
        assert!(env.convergence.is_empty());
        assert_eq!(env.failures.len(), 1);
        assert_eq!(env.failures[0].task, "convergence/left");
        assert_eq!(env.exit_code(), 1);
    }

    #[test]
    fn verify_runs_property_suites() {
        let cfg = parse_config(
            "seed = 4\n[verify]\nlemma21_instances = 50\ntriples = 3\n[model]\nfamily = \"commuting\"\ndim = 4\n",
        )
        .unwrap();
        let env = run(&cfg, Command::Verify).unwrap();
        let l = env.lemma21.unwrap();
        assert!(l.all_hold && l.instances == 50);
        assert!(env.axioms.unwrap().holds);
        assert!(env.convergence.is_empty() && env.constants.is_none());
    }

    #[test]
    fn timings_only_when_requested() {
        let text = "scheme = \"left\"\nn_list = [4, 8, 16]\n[lifting]\nenabled = false\n[model]\nfamily = \"scalar\"\n";
        let env = run(&parse_config(text).unwrap(), Command::Run).unwrap();
        assert!(env.timings.is_empty());
        let env = run(&parse_config(&format!("timings = true\n{text}")).unwrap(), Command::Run).unwrap();
        assert_eq!(env.timings.len(), 3);
    }
}
