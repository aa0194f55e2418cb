use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use gibbsflow::analysis::{AxiomsCheck, ConstantsReport, ConvergenceReport, Lemma21Summary, LiftingCheck};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::runner::{Command, Failure, ReportEnvelope, Timing};

/// One json-lines record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header { version: String, command: Command },
    Config { config: ExperimentConfig },
    Constants(ConstantsReport),
    Convergence(ConvergenceReport),
    Lifting(LiftingCheck),
    Lemma21(Lemma21Summary),
    Axioms(AxiomsCheck),
    Failure(Failure),
    Timing(Timing),
}

pub const CSV_HEADER: [&str; 6] = ["scheme", "n", "err_op", "err_tr", "epsilon_theory", "ratio"];

/// Serializes the envelope in `format`.
pub fn render(env: &ReportEnvelope, format: Format) -> String {
    match format {
        Format::Jsonl => to_jsonl(env),
        Format::Csv => to_csv(env),
        Format::Plot => to_plot(env),
    }
}

/// Writes the rendering to `path`, or to stdout when `path` is `None`.
pub fn emit(env: &ReportEnvelope, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let text = render(env, format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub fn to_jsonl(env: &ReportEnvelope) -> String {
    let mut records = vec![
        Record::Header { version: env.version.clone(), command: env.command },
        Record::Config { config: env.config.clone() },
    ];
    records.extend(env.constants.clone().map(Record::Constants));
    records.extend(env.convergence.iter().cloned().map(Record::Convergence));
    records.extend(env.lifting.iter().cloned().map(Record::Lifting));
    records.extend(env.lemma21.clone().map(Record::Lemma21));
    records.extend(env.axioms.clone().map(Record::Axioms));
    records.extend(env.failures.iter().cloned().map(Record::Failure));
    records.extend(env.timings.iter().cloned().map(Record::Timing));
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Rebuilds an envelope from its json-lines rendering.
pub fn parse_jsonl(text: &str) -> Result<ReportEnvelope, CliError> {
    let bad = |line: usize, msg: String| CliError::Validation(vec![format!("line {line}: {msg}")]);
    let mut header = None;
    let mut config = None;
    let mut parts = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: Record = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
        match rec {
            Record::Header { version, command } => header = Some((version, command)),
            Record::Config { config: c } => config = Some(c),
            other => parts.push(other),
        }
    }
    let (version, command) = header.ok_or_else(|| bad(0, "missing header record".into()))?;
    let config = config.ok_or_else(|| bad(0, "missing config record".into()))?;
    let mut env = ReportEnvelope {
        version,
        command,
        config,
        constants: None,
        convergence: Vec::new(),
        lifting: Vec::new(),
        lemma21: None,
        axioms: None,
        failures: Vec::new(),
        timings: Vec::new(),
    };
    for p in parts {
        match p {
            Record::Constants(c) => env.constants = Some(c),
            Record::Convergence(c) => env.convergence.push(c),
            Record::Lifting(c) => env.lifting.push(c),
            Record::Lemma21(c) => env.lemma21 = Some(c),
            Record::Axioms(c) => env.axioms = Some(c),
            Record::Failure(f) => env.failures.push(f),
            Record::Timing(t) => env.timings.push(t),
            Record::Header { .. } | Record::Config { .. } => unreachable!(),
        }
    }
    Ok(env)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(env: &ReportEnvelope) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &env.convergence {
        for (i, &n) in r.n_list.iter().enumerate() {
            let eps = r.epsilon[i];
            w.write_record([
                r.scheme.name().to_string(),
                n.to_string(),
                r.err_op[i].to_string(),
                r.err_tr[i].to_string(),
                opt(eps),
                opt(eps.map(|e| r.err_tr[i] / e)),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Gnuplot data: per scheme an `(n, err_tr)` block and, when a rate applies, an
/// `(n, prefactor·ε(n))` block, separated by blank-line pairs so `index` selects them.
pub fn to_plot(env: &ReportEnvelope) -> String {
    let mut out = String::new();
    let mut block = |title: String, rows: Vec<(usize, f64)>| {
        if !out.is_empty() {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {title}");
        for (n, y) in rows {
            let _ = writeln!(out, "{n} {y:.16e}");
        }
    };
    for r in &env.convergence {
        let scheme = r.scheme.name();
        block(
            format!("{scheme} err_tr"),
            r.n_list.iter().copied().zip(r.err_tr.iter().copied()).collect(),
        );
        if let Some(c) = r.train_prefactor {
            let rows = r
                .n_list
                .iter()
                .zip(&r.epsilon)
                .filter_map(|(&n, e)| e.map(|e| (n, c * e)))
                .collect();
            block(format!("{scheme} prefactor*epsilon"), rows);
        }
    }
    out
}
