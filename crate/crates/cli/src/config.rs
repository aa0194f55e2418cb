//! Experiment configuration: one TOML document per experiment.
//!
//! ```toml
//! scheme = "all"
//! s = 0.0
//! t = 1.0
//! n_list = { min = 8, max = 1024, factor = 2 }
//! alpha = 0.2
//! beta = 0.5
//!
//! [model]
//! family = "rotating"
//! dim = 16
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use gibbsflow::model::Model;
use gibbsflow::operator::HermitianOperator;
use gibbsflow::propagator::Scheme;
use gibbsflow::Profile;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn one() -> f64 {
    1.0
}
fn default_scheme() -> String {
    "all".into()
}
fn default_tol_ref() -> f64 {
    1e-10
}
fn default_grid() -> usize {
    gibbsflow::analysis::DEFAULT_GRID
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default)]
    pub n_list: NList,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_tol_ref")]
    pub tol_ref: f64,
    #[serde(default)]
    pub seed: u64,
    /// Prefactor is fitted on `n ≤ train_n_max`; without it, on the first half of `n_list`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_n_max: Option<usize>,
    /// Grid size for the constants estimate.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Record wall-clock timings in the envelope (breaks byte-identical output).
    #[serde(default)]
    pub timings: bool,
    pub model: ModelConfig,
    #[serde(default)]
    pub lifting: LiftingConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NList {
    Explicit(Vec<usize>),
    Geometric { min: usize, max: usize, factor: usize },
}

impl Default for NList {
    fn default() -> Self {
        NList::Geometric { min: 8, max: 1024, factor: 2 }
    }
}

impl NList {
    pub fn values(&self) -> Vec<usize> {
        match *self {
            NList::Explicit(ref v) => v.clone(),
            NList::Geometric { min, max, factor } => {
                let mut out = Vec::new();
                if min == 0 || factor < 2 {
                    return out;
                }
                let mut n = min;
                while n <= max {
                    out.push(n);
                    n = match n.checked_mul(factor) {
                        Some(next) => next,
                        None => break,
                    };
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `scalar`, `commuting` or `rotating`.
    pub family: String,
    #[serde(default = "one")]
    pub horizon: f64,
    /// Scalar generator value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Used for `lambdas = 1..=dim` when `lambdas` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<B0Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum B0Config {
    Diagonal { values: Vec<f64> },
    RankOne { vector: Vec<f64> },
    Dense { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftingConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_lifting_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_lifting_schemes")]
    pub schemes: Vec<String>,
}

fn default_lifting_n() -> Vec<usize> {
    vec![4, 8, 16, 32]
}
fn default_lifting_schemes() -> Vec<String> {
    vec!["left".into(), "symmetric".into()]
}

impl Default for LiftingConfig {
    fn default() -> Self {
        Self { enabled: true, n_list: default_lifting_n(), schemes: default_lifting_schemes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_instances")]
    pub lemma21_instances: usize,
    #[serde(default = "default_max_dim")]
    pub lemma21_max_dim: usize,
    #[serde(default = "default_max_factors")]
    pub lemma21_max_factors: usize,
    #[serde(default = "default_triples")]
    pub triples: usize,
}

fn default_instances() -> usize {
    1000
}
fn default_max_dim() -> usize {
    16
}
fn default_max_factors() -> usize {
    8
}
fn default_triples() -> usize {
    20
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            lemma21_instances: default_instances(),
            lemma21_max_dim: default_max_dim(),
            lemma21_max_factors: default_max_factors(),
            triples: default_triples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Jsonl,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn parse_scheme(name: &str) -> Option<Scheme> {
    name.parse().ok()
}

impl ExperimentConfig {
    /// Schemes selected by `scheme` (`"all"` expands to every scheme).
    pub fn schemes(&self) -> Vec<Scheme> {
        if self.scheme.eq_ignore_ascii_case("all") {
            Scheme::ALL.to_vec()
        } else {
            parse_scheme(&self.scheme).into_iter().collect()
        }
    }

    pub fn lifting_schemes(&self) -> Vec<Scheme> {
        self.lifting.schemes.iter().filter_map(|s| parse_scheme(s)).collect()
    }

    /// Every validation failure, each prefixed with its field path.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let m = &self.model;
        if !(m.horizon > 0.0 && m.horizon.is_finite()) {
            errs.push(format!("model.horizon: must be positive, got {}", m.horizon));
        }
        if !(self.s >= 0.0) {
            errs.push(format!("s: must be non-negative, got {}", self.s));
        }
        if !(self.s < self.t) {
            errs.push(format!("s, t: s < t required (got s = {}, t = {})", self.s, self.t));
        }
        if self.t > m.horizon {
            errs.push(format!("t: must not exceed model.horizon = {}, got {}", m.horizon, self.t));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            errs.push(format!("alpha: alpha ∈ [0,1) required, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            errs.push(format!("beta: beta ∈ (0,1] required, got {}", self.beta));
        }
        if !(self.tol_ref >= 1e-12) {
            errs.push(format!("tol_ref: must be at least 1e-12, got {}", self.tol_ref));
        }
        if self.grid < 2 {
            errs.push(format!("grid: needs at least 2 points, got {}", self.grid));
        }
        if !self.scheme.eq_ignore_ascii_case("all") && parse_scheme(&self.scheme).is_none() {
            errs.push(format!(
                "scheme: unknown scheme '{}' (expected left, right, symmetric or all)",
                self.scheme
            ));
        }
        let ns = self.n_list.values();
        if let NList::Geometric { min, factor, .. } = self.n_list {
            if min == 0 {
                errs.push("n_list.min: must be positive".into());
            }
            if factor < 2 {
                errs.push(format!("n_list.factor: must be at least 2, got {factor}"));
            }
        }
        if ns.is_empty() {
            errs.push("n_list: must not be empty".into());
        } else if ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
            errs.push(format!("n_list: must be strictly ascending positive integers, got {ns:?}"));
        }
        for (i, name) in self.lifting.schemes.iter().enumerate() {
            if parse_scheme(name).is_none() {
                errs.push(format!("lifting.schemes[{i}]: unknown scheme '{name}'"));
            }
        }
        for (i, &n) in self.lifting.n_list.iter().enumerate() {
            if n < 4 || n % 2 != 0 {
                errs.push(format!("lifting.n_list[{i}]: must be even and at least 4, got {n}"));
            }
        }
        if self.verify.lemma21_max_dim == 0 {
            errs.push("verify.lemma21_max_dim: must be positive".into());
        }
        if self.verify.lemma21_max_factors == 0 {
            errs.push("verify.lemma21_max_factors: must be positive".into());
        }
        errs.extend(self.model_errors());
        errs
    }

    fn model_errors(&self) -> Vec<String> {
        let m = &self.model;
        let mut errs = Vec::new();
        let allowed: &[&str] = match m.family.as_str() {
            "scalar" => &["a", "profile"],
            "commuting" => &["lambdas", "dim", "d0", "profile"],
            "rotating" => &["lambdas", "dim", "b0", "omega", "t0"],
            other => {
                errs.push(format!(
                    "model.family: unknown model family '{other}' (expected scalar, commuting or rotating)"
                ));
                return errs;
            }
        };
        let present = [
            ("a", m.a.is_some()),
            ("lambdas", m.lambdas.is_some()),
            ("dim", m.dim.is_some()),
            ("d0", m.d0.is_some()),
            ("profile", m.profile.is_some()),
            ("b0", m.b0.is_some()),
            ("omega", m.omega.is_some()),
            ("t0", m.t0.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                errs.push(format!("model.{name}: not a parameter of the {} family", m.family));
            }
        }
        if m.lambdas.is_some() && m.dim.is_some() {
            errs.push("model.dim: give either lambdas or dim, not both".into());
        }
        if let Some(ref l) = m.lambdas {
            if l.is_empty() {
                errs.push("model.lambdas: must not be empty".into());
            }
            for (i, &x) in l.iter().enumerate() {
                if !(x >= 1.0) {
                    errs.push(format!("model.lambdas[{i}]: must be at least 1, got {x}"));
                }
            }
        }
        if let Some(a) = m.a {
            if !(a >= 1.0) {
                errs.push(format!("model.a: must be at least 1, got {a}"));
            }
        }
        if m.dim == Some(0) {
            errs.push("model.dim: must be positive".into());
        }
        let dim = self.model_dim();
        if m.family == "rotating" && dim < 2 {
            errs.push(format!("model.dim: rotating family needs dimension at least 2, got {dim}"));
        }
        if let Some(ref d0) = m.d0 {
            if d0.len() != dim {
                errs.push(format!("model.d0: expected {dim} entries, got {}", d0.len()));
            }
            for (i, &x) in d0.iter().enumerate() {
                if !(x >= 0.0) {
                    errs.push(format!("model.d0[{i}]: must be non-negative, got {x}"));
                }
            }
        }
        if let Some(ref b0) = m.b0 {
            let len = match b0 {
                B0Config::Diagonal { values } => values.len(),
                B0Config::RankOne { vector } => vector.len(),
                B0Config::Dense { rows } => {
                    if rows.iter().any(|r| r.len() != rows.len()) {
                        errs.push("model.b0.rows: must form a square matrix".into());
                    }
                    rows.len()
                }
            };
            if len != dim {
                errs.push(format!("model.b0: expected dimension {dim}, got {len}"));
            }
        }
        errs
    }

    fn model_dim(&self) -> usize {
        let m = &self.model;
        match (&m.lambdas, m.dim, m.family.as_str()) {
            (_, _, "scalar") => 1,
            (Some(l), _, _) => l.len(),
            (None, Some(d), _) => d,
            (None, None, "rotating") => 16,
            (None, None, _) => 8,
        }
    }

    /// Builds the model, folding any construction failure into a validation error.
    pub fn build_model(&self) -> Result<Model, CliError> {
        let errs = self.validate();
        if !errs.is_empty() {
            return Err(CliError::Validation(errs));
        }
        self.try_build().map_err(|e| CliError::Validation(vec![format!("model: {e}")]))
    }

    fn try_build(&self) -> gibbsflow::Result<Model> {
        let m = &self.model;
        let dim = self.model_dim();
        let lambdas = m
            .lambdas
            .clone()
            .unwrap_or_else(|| (1..=dim).map(|k| k as f64).collect());
        let model = match m.family.as_str() {
            "scalar" => {
                let profile = m.profile.unwrap_or(Profile::Linear { offset: 0.0, slope: 1.0 });
                Model::scalar(m.a.unwrap_or(1.0), profile, self.beta)?
            }
            "commuting" => {
                let d0 = m
                    .d0
                    .clone()
                    .unwrap_or_else(|| (1..=dim).map(|k| 1.0 / k as f64).collect());
                let profile = m.profile.unwrap_or(Profile::Linear { offset: 1.0, slope: 1.0 });
                Model::commuting(&lambdas, &d0, profile, self.beta)?
            }
            _ => {
                let b0 = match m.b0.clone() {
                    Some(B0Config::Diagonal { values }) => HermitianOperator::from_diagonal(&values)?,
                    Some(B0Config::Dense { rows }) => HermitianOperator::from_rows(&rows)?,
                    Some(B0Config::RankOne { vector }) => rank_one(&vector)?,
                    None => {
                        let u: Vec<f64> = (1..=dim).map(|k| (k as f64).sqrt().recip()).collect();
                        rank_one(&u)?
                    }
                };
                Model::rotating(&lambdas, b0, m.omega.unwrap_or(PI), self.beta, m.t0.unwrap_or(0.5))?
            }
        };
        model.with_alpha(self.alpha)?.with_horizon(m.horizon)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn rank_one(u: &[f64]) -> gibbsflow::Result<HermitianOperator> {
    HermitianOperator::new(DMatrix::from_fn(u.len(), u.len(), |i, j| u[i] * u[j]))
}

/// Parses and validates a TOML document, reporting all failures at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(errs))
    }
}
