use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gibbsflow_cli::{emit, parse_config, parse_jsonl, run, CliError, Command, Format};

#[derive(Parser)]
#[command(name = "gibbsflow", version, about = "Product-formula convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads; falls back to GIBBSFLOW_THREADS, then to all cores.
    #[arg(long, global = true, env = "GIBBSFLOW_THREADS")]
    threads: Option<usize>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Convergence experiment with constants and lifting checks.
    Run,
    /// Lemma, cocycle, contraction and lifting property suites.
    Verify,
    /// Regularity constants only.
    Constants,
    /// Re-emit a stored json-lines envelope in another format.
    Report {
        /// Envelope written by a previous `--format jsonl` run.
        #[arg(long)]
        input: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Validation(vec![format!("threads: {e}")]))?;
    }
    let command = match cli.command {
        Sub::Report { input } => {
            let env = parse_jsonl(&read(&input)?)?;
            let format = cli.format.unwrap_or(Format::Csv);
            emit(&env, format, cli.output.as_deref())?;
            return Ok(0);
        }
        Sub::Run => Command::Run,
        Sub::Verify => Command::Verify,
        Sub::Constants => Command::Constants,
    };
    let path = cli
        .config
        .ok_or_else(|| CliError::Validation(vec!["--config: required for this command".into()]))?;
    let mut config = parse_config(&read(&path)?)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(out) = cli.output {
        config.output.path = Some(out);
    }
    if cli.verbose {
        eprintln!("gibbsflow: {command:?} on {} ({} threads)", path.display(), rayon::current_num_threads());
    }
    let env = run(&config, command)?;
    if config.output.format == Format::Csv && env.convergence.is_empty() {
        eprintln!("warning: no convergence reports; csv output has a header only");
    }
    for f in &env.failures {
        eprintln!("warning: {} failed: {}", f.task, f.message);
    }
    if cli.verbose {
        for r in &env.convergence {
            for w in &r.warnings {
                eprintln!("note: {}: {w}", r.scheme);
            }
        }
    }
    emit(&env, config.output.format, config.output.path.as_deref())?;
    Ok(env.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
