//! Configuration, orchestration and report emission for `gibbsflow` experiments.

pub mod config;
pub mod emit;
pub mod error;
pub mod runner;

pub use config::{parse_config, ExperimentConfig, Format};
pub use emit::{emit, parse_jsonl, render};
pub use error::CliError;
pub use runner::{run, Command, ReportEnvelope};
