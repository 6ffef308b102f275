use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("time {t} outside the domain [0, {horizon})")]
    Domain { t: f64, horizon: f64 },

    #[error("quadrature diverges: {0}")]
    Divergence(String),

    #[error("integrability failure: {0}")]
    Integrability(String),

    #[error("state {x} outside the solved grid [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },

    #[error("invalid diffusion: {0}")]
    InvalidDiffusion(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("invalid perturbation profile: {0}")]
    InvalidProfile(String),

    #[error("path {path} aborted: {reason}")]
    PathAbort { path: u64, reason: String },

    #[error("{} configuration violation(s):\n  - {}", .0.len(), .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
