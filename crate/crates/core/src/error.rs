use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("symmetric eigensolver did not converge (dim {dim}, norm {norm:e})")]
    Eigen { dim: usize, norm: f64 },

    #[error("singular value decomposition did not converge (dim {dim}, norm {norm:e})")]
    Svd { dim: usize, norm: f64 },

    #[error("{function} is undefined at eigenvalue {eigenvalue:e}")]
    Domain { function: String, eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid model: {0}")]
    ModelValidity(String),

    #[error("time {t} lies outside [0, {horizon}]")]
    Range { t: f64, horizon: f64 },

    #[error("s < t required (got s = {s}, t = {t})")]
    Ordering { s: f64, t: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{what}: accuracy {achieved:e} not reached (requested {requested:e})")]
    Accuracy {
        what: String,
        achieved: f64,
        requested: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("no known operator-norm bound for alpha = {alpha}, beta = {beta}")]
    NoKnownBound { alpha: f64, beta: f64 },
}

impl Error {
    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Eigen { .. } | Error::Svd { .. } | Error::Accuracy { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
