//! Command-line surface: argument structures and their mapping onto the
//! library's configuration enums.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvcp_core::rvalue::Estimator;
use rvcp_core::types::{Method, VarianceMode};

#[derive(Debug, Parser)]
#[command(
    name = "rvcp",
    version,
    about = "Conformal prediction sets from sampled candidate scores, \
             with variability-aware r-value ranking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate calibration and test tensors from a synthetic-world spec.
    Simulate(SimulateArgs),
    /// Fit a predictor on a labeled calibration tensor.
    Calibrate(CalibrateArgs),
    /// Apply a saved predictor to a test tensor.
    Predict(PredictArgs),
    /// Score prediction sets against true labels.
    Evaluate(EvaluateArgs),
    /// Paired comparison of all methods over exchangeable resplits.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML world description: prior, variance distribution, and shape.
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    /// Output path for the calibration tensor.
    #[arg(long, value_name = "FILE")]
    pub out_cal: PathBuf,
    /// Output path for the test tensor.
    #[arg(long, value_name = "FILE")]
    pub out_test: PathBuf,
    /// Root seed; every random draw flows from it.
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Nonconformity score family.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Miscoverage level in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// R-value estimator (cp-rvalue only).
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// How per-candidate observation variance is derived (parametric only).
    #[arg(long, value_enum)]
    pub variance_mode: Option<VarianceModeArg>,
    /// Beta-grid size of the parametric threshold table.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// TOML file supplying defaults for the flags above
    /// (flag > file > built-in default).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Labeled calibration tensor.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Output path for the predictor snapshot.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Predictor snapshot written by `calibrate`.
    #[arg(long, value_name = "FILE")]
    pub predictor: PathBuf,
    /// Test tensor (labels not required).
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    /// Output path for the line-delimited prediction sets.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Prediction-set file written by `predict`.
    #[arg(long, value_name = "FILE")]
    pub sets: PathBuf,
    /// Labeled tensor supplying the true labels, matched by item id.
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Output path for the JSON report.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Labeled calibration tensor; pooled with --test, then resplit.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Labeled test tensor.
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    /// Miscoverage level in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of exchangeable resplits of the pooled items.
    #[arg(long)]
    pub trials: usize,
    /// Root seed; every resplit flows from it.
    #[arg(long)]
    pub seed: u64,
    /// TOML file supplying a default alpha (flag > file > built-in).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Optional path for the machine-readable JSON report.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Split CP on one fixed score sample.
    Cp,
    /// Split CP on the per-candidate mean score.
    CpAvg,
    /// Split CP on r-values.
    CpRvalue,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Cp => Method::Cp,
            MethodArg::CpAvg => Method::CpAvg,
            MethodArg::CpRvalue => Method::CpRvalue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Parametric,
    Nonparametric,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Estimator {
        match e {
            EstimatorArg::Parametric => Estimator::Parametric,
            EstimatorArg::Nonparametric => Estimator::Nonparametric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceModeArg {
    /// Sample variance across the M samples.
    Raw,
    /// Variance of the sample mean (sample variance / M).
    StandardError,
}

impl From<VarianceModeArg> for VarianceMode {
    fn from(v: VarianceModeArg) -> VarianceMode {
        match v {
            VarianceModeArg::Raw => VarianceMode::Raw,
            VarianceModeArg::StandardError => VarianceMode::StandardError,
        }
    }
}
