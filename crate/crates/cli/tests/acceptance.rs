//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use gibbsflow::analysis::{
    contraction_coefficient, is_nonincreasing, lemma21_ensemble, lifting_check, run_convergence,
    run_convergence_with, sample_triples, verify_reference_axioms, ConvergenceOptions,
    LiftingOracle, TrainSplit, DEFAULT_GRID,
};
use gibbsflow::model::{builtin_models, commuting_lipschitz, rotating_holder, Model, Profile};
use gibbsflow::propagator::{
    dyson_phillips_partial_sums, integral_equation_residual, reference_propagator, Scheme,
};
use gibbsflow::quadrature::QuadratureSpec;
use gibbsflow_cli::emit::to_jsonl;
use gibbsflow_cli::{parse_config, run, Command};

const TOL_REF: f64 = 1e-10;

type Outcome = Result<String, String>;

fn doubling(lo: usize, hi: usize) -> Vec<usize> {
    let mut v = vec![lo];
    while *v.last().unwrap() < hi {
        v.push(2 * v.last().unwrap());
    }
    v
}

fn within(limit: Option<Duration>, elapsed: Duration) -> Result<(), String> {
    match limit {
        Some(l) if elapsed > l => Err(format!("runtime {elapsed:.2?} exceeds {l:.0?}")),
        _ => Ok(()),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scalar_oracle_rate() -> Outcome {
    let m = Model::scalar(1.0, Profile::Linear { offset: 0.0, slope: 1.0 }, 1.0).map_err(|e| e.to_string())?;
    let ns = doubling(8, 1024);
    let r = run_convergence(&m, Scheme::Left, 0.0, 1.0, &ns, TOL_REF).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (&n, &e) in ns.iter().zip(&r.err_tr) {
        // U_n = exp(-1 - (n-1)/(2n)) against exp(-3/2)
        let closed = (-1.5f64).exp() * (0.5 / n as f64).exp_m1();
        worst = worst.max((e - closed).abs());
    }
    ensure(worst <= 1e-12, || format!("closed-form mismatch {worst:.3e}"))?;
    let slope = r.fitted_slope.ok_or("no fit")?;
    ensure((-1.05..=-0.95).contains(&slope), || format!("slope {slope:.4}"))?;
    Ok(format!("max deviation {worst:.1e}, slope {slope:.4}"))
}

fn commuting_oracle() -> Outcome {
    let m = commuting_lipschitz(8).map_err(|e| e.to_string())?;
    let ns = doubling(8, 512);
    let mut slopes = Vec::new();
    for scheme in Scheme::ALL {
        let r = run_convergence(&m, scheme, 0.0, 1.0, &ns, TOL_REF).map_err(|e| e.to_string())?;
        ensure(is_nonincreasing(&r.err_tr, 0.0), || format!("{scheme}: not monotone {:?}", r.err_tr))?;
        let slope = r.fitted_slope.ok_or("no fit")?;
        ensure(slope <= -0.9, || format!("{scheme}: slope {slope:.4}"))?;
        slopes.push(format!("{scheme} {slope:.4}"));
    }
    Ok(format!("slopes {}", slopes.join(", ")))
}

fn upper_bound_consistency() -> Outcome {
    let ns = doubling(8, 1024);
    let opts = ConvergenceOptions { tol_ref: TOL_REF, train: TrainSplit::UpTo(32), slack: 0.1 };
    let mut notes = Vec::new();
    for alpha in [0.2, 0.6] {
        let m = rotating_holder(16)
            .and_then(|m| m.with_alpha(alpha))
            .map_err(|e| e.to_string())?;
        for scheme in Scheme::ALL {
            let r = run_convergence_with(&m, scheme, 0.0, 1.0, &ns, &opts).map_err(|e| e.to_string())?;
            let regime = r.regime.ok_or("no regime selected")?;
            let c = r.train_prefactor.ok_or("no prefactor")?;
            let worst = r
                .ratios()
                .iter()
                .zip(&ns)
                .filter(|(_, &n)| n >= 64)
                .map(|(q, _)| q.unwrap() / c)
                .fold(0.0, f64::max);
            ensure(r.bound_satisfied == Some(true), || {
                format!("alpha {alpha}, {scheme} ({}): test/train ratio {worst:.3}", regime.kind)
            })?;
            notes.push(format!("a={alpha} {scheme} {worst:.3}"));
        }
    }
    Ok(format!("max test/train ratio: {}", notes.join(", ")))
}

fn lemma_ensemble() -> Outcome {
    let s = lemma21_ensemble(2024, 1000, 16, 8).map_err(|e| e.to_string())?;
    ensure(s.all_hold && s.min_relative_margin >= -1e-10, || format!("{s:?}"))?;
    Ok(format!("{} instances, min relative margin {:.3e}", s.instances, s.min_relative_margin))
}

fn dyson_tail() -> Outcome {
    let quad = QuadratureSpec::default();
    let cases: Vec<(Model, f64, f64)> = vec![
        (Model::scalar(1.0, Profile::Linear { offset: 0.0, slope: 1.0 }, 1.0).map_err(|e| e.to_string())?, 0.2, 0.6),
        (
            Model::scalar(2.0, Profile::Holder { offset: 0.0, scale: 1.0, center: 0.5, exponent: 0.5 }, 0.5)
                .map_err(|e| e.to_string())?,
            0.3,
            0.7,
        ),
        (commuting_lipschitz(8).map_err(|e| e.to_string())?, 0.0, 0.3),
        (commuting_lipschitz(8).map_err(|e| e.to_string())?, 0.6, 0.8),
    ];
    let mut worst_slack = f64::INFINITY;
    for (m, s, t) in &cases {
        let xi = contraction_coefficient(m, *s, *t, DEFAULT_GRID).map_err(|e| e.to_string())?;
        ensure(xi <= 0.5, || format!("{}: xi {xi:.3} on [{s}, {t}]", m.descriptor()))?;
        let exact = m.exact(*s, *t).map_err(|e| e.to_string())?.ok_or("no closed form")?;
        let sums = dyson_phillips_partial_sums(m, *s, *t, 6, &quad).map_err(|e| e.to_string())?;
        for n in 1..=6 {
            let err = (&sums[n] - &exact).trace_norm().map_err(|e| e.to_string())?;
            let bound = xi.powi(n as i32 + 1) / (1.0 - xi) + 10.0 * quad.tol;
            ensure(err <= bound, || format!("{} N={n}: {err:.3e} > {bound:.3e}", m.descriptor()))?;
            worst_slack = worst_slack.min(bound - err);
        }
    }
    Ok(format!("{} intervals x N=1..6, min slack {worst_slack:.2e}", cases.len()))
}

fn evolution_axioms() -> Outcome {
    let mut notes = Vec::new();
    for (name, m) in builtin_models().map_err(|e| e.to_string())? {
        let triples = sample_triples(17, 20, m.horizon());
        let c = verify_reference_axioms(&m, &triples, TOL_REF).map_err(|e| e.to_string())?;
        ensure(c.holds, || {
            format!("{name}: cocycle {:.3e}, norm {:.12}", c.max_cocycle_residual, c.max_op_norm)
        })?;
        notes.push(format!("{name} {:.1e}", c.max_cocycle_residual));
    }
    Ok(format!("max cocycle residual: {}", notes.join(", ")))
}

fn lifting() -> Outcome {
    let mut min_margin = f64::INFINITY;
    let mut count = 0;
    for (name, m) in builtin_models().map_err(|e| e.to_string())? {
        let oracle = LiftingOracle::new(&m, 0.0, 1.0, TOL_REF).map_err(|e| e.to_string())?;
        for scheme in [Scheme::Left, Scheme::Symmetric] {
            for n in [4, 8, 16, 32] {
                let c = lifting_check(&m, &oracle, scheme, n).map_err(|e| e.to_string())?;
                ensure(c.margin >= 0.0, || format!("{name} {scheme} n={n}: margin {:.3e}", c.margin))?;
                min_margin = min_margin.min(c.margin);
                count += 1;
            }
        }
    }
    Ok(format!("{count} checks, min margin {min_margin:.3e}"))
}

fn integral_equation() -> Outcome {
    let quad = QuadratureSpec::default();
    let limit = 10.0 * (quad.tol + TOL_REF);
    let mut worst: f64 = 0.0;
    for (name, m) in builtin_models().map_err(|e| e.to_string())? {
        if !m.has_exact() {
            continue;
        }
        let exact = |a: f64, b: f64| Ok(m.exact(a, b)?.expect("closed form"));
        let reference = |a: f64, b: f64| Ok(reference_propagator(&m, a, b, TOL_REF)?.u);
        let r_exact = integral_equation_residual(exact, &m, 0.0, 1.0, &quad).map_err(|e| e.to_string())?;
        let r_ref = integral_equation_residual(reference, &m, 0.0, 1.0, &quad).map_err(|e| e.to_string())?;
        ensure(r_exact <= limit && r_ref <= limit, || {
            format!("{name}: exact {r_exact:.3e}, reference {r_ref:.3e}, limit {limit:.1e}")
        })?;
        worst = worst.max(r_exact).max(r_ref);
    }
    Ok(format!("max residual {worst:.3e} (limit {limit:.1e})"))
}

fn ordering_and_determinism() -> Outcome {
    let text = r#"
scheme = "all"
n_list = [8, 16, 32, 64]
alpha = 0.2
beta = 0.5
seed = 99
grid = 101

[verify]
lemma21_instances = 100
triples = 5

[model]
family = "rotating"
dim = 6
"#;
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    let render = |threads: usize, command: Command| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| run(&cfg, command)).map(|env| to_jsonl(&env)).map_err(|e| e.to_string())
    };
    let mut reports = 0;
    for command in [Command::Run, Command::Verify] {
        let first = render(1, command)?;
        ensure(first == render(1, command)?, || format!("{command:?}: repeated runs differ"))?;
        ensure(first == render(4, command)?, || format!("{command:?}: thread count changes output"))?;
    }
    let env = run(&cfg, Command::Run).map_err(|e| e.to_string())?;
    for r in &env.convergence {
        ensure(r.norm_ordering_holds(), || format!("{}: err_op exceeds err_tr", r.scheme))?;
        reports += 1;
    }
    ensure(reports == 3, || format!("expected 3 reports, got {reports}"))?;
    Ok(format!("{reports} reports ordered, jsonl byte-identical across repeats and thread counts"))
}

fn main() {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 9] = [
        ("scalar oracle rate", Some(1), scalar_oracle_rate),
        ("commuting oracle", Some(5), commuting_oracle),
        ("upper-bound consistency", Some(60), upper_bound_consistency),
        ("smoothing product inequality", Some(10), lemma_ensemble),
        ("Dyson-Phillips tail", Some(30), dyson_tail),
        ("evolution-family axioms", None, evolution_axioms),
        ("lifting decomposition", None, lifting),
        ("integral-equation residual", None, integral_equation),
        ("norm ordering and determinism", None, ordering_and_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| within(limit.map(Duration::from_secs), elapsed).map(|_| msg));
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
