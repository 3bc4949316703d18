//! Library error taxonomy.
//!
//! Variants split into two families the CLI maps to distinct exit codes:
//! malformed input (files, shapes, domains) and statistical preconditions
//! (not enough calibration data, degenerate variance structure).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // Input / shape / domain problems.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("header mismatch for item '{id}': {msg}")]
    HeaderMismatch { id: String, msg: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid generative spec: {0}")]
    InvalidSpec(String),
    #[error("missing sample index {requested}; tensor has M = {available}")]
    MissingSample { requested: usize, available: usize },
    #[error("missing true labels: {0}")]
    MissingLabels(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    // Statistical preconditions.
    #[error(
        "insufficient calibration data: rank ceil((n+1)(1-alpha)) = {rank} exceeds n = {n} \
         (alpha = {alpha}); need n >= ceil(1/alpha) - 1 items"
    )]
    InsufficientCalibration { n: usize, alpha: f64, rank: usize },
    #[error("every pooled obs_var is zero but a variance-aware estimator was requested")]
    AllZeroVariance,
    #[error("g support is degenerate (no strictly positive obs_var): z_beta is undefined")]
    DegenerateG,
    #[error("empty candidate population: {0}")]
    EmptyPopulation(String),
}

impl Error {
    /// True for errors describing a statistical precondition rather than a
    /// malformed input; the CLI uses this split for exit codes.
    #[must_use]
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientCalibration { .. }
                | Error::AllZeroVariance
                | Error::DegenerateG
                | Error::EmptyPopulation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
