use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the trim / synthesis / simulation pipeline.
#[derive(Debug, Error)]
pub enum IgcError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Euler angle singularity: |theta| = {theta_deg:.2} deg exceeds the guard")]
    Singularity { theta_deg: f64 },

    #[error("trim did not converge after {iterations} iterations (best residual {residual:.3e})")]
    TrimFailed { residual: f64, iterations: usize },

    #[error("trim outside the actuator envelope: {0}")]
    TrimOutOfEnvelope(String),

    #[error("linearization failed: {0}")]
    Linearization(String),

    #[error("model assembly failed: {0}")]
    Assembly(String),

    #[error("invalid weighting filter: {0}")]
    Weight(String),

    #[error(
        "synthesis failed: no certified gain after {generations} generations (best LMI residual {best_residual:.3e})"
    )]
    SynthesisFailed { best_residual: f64, generations: usize },

    #[error("simulation diverged at t = {t:.2} s: {reason}")]
    Divergence { t: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, IgcError>;

impl IgcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IgcError::Io {
            path: path.into(),
            source,
        }
    }
}
