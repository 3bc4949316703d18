//! Layered configuration: CLI flag > TOML config file > built-in default,
//! plus the TOML description of a synthetic world for `simulate`.

use std::path::Path;

use clap::ValueEnum;
use serde::Deserialize;

use rvcp_core::conformal::CalibrationConfig;
use rvcp_core::eb::DEFAULT_GRID_SIZE;
use rvcp_core::simulator::{GSpec, GenerativeSpec, TrueLabelRule};
use rvcp_core::types::{Method, RngSpec, VarianceMode};
use rvcp_core::{Error, Result};

use crate::cli::{CalibrateArgs, EstimatorArg, MethodArg, VarianceModeArg};

pub const DEFAULT_ALPHA: f64 = 0.1;

/// Optional knobs a TOML config file may supply. Values use the same
/// spellings as the CLI flags (e.g. `method = "cp-rvalue"`,
/// `variance_mode = "standard-error"`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub estimator: Option<String>,
    pub variance_mode: Option<String>,
    pub grid_size: Option<usize>,
}

/// Read a config file when a path was given; absent path means no layer.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        Error::InvalidSpec(format!("bad config file {}: {e}", path.display()))
    })
}

/// Parse a config-file string through the same vocabulary as the CLI flag.
fn parse_enum<T: ValueEnum>(value: &str, field: &str) -> Result<T> {
    T::from_str(value, false).map_err(|_| {
        let allowed: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value())
            .map(|p| p.get_name().to_string())
            .collect();
        Error::InvalidSpec(format!(
            "config field {field} = {value:?} not recognized (expected one of {})",
            allowed.join(", ")
        ))
    })
}

/// Resolve the effective calibration configuration for `calibrate`.
pub fn resolve_calibration(args: &CalibrateArgs, file: &FileConfig) -> Result<CalibrationConfig> {
    let method: Method = match (args.method, &file.method) {
        (Some(flag), _) => flag.into(),
        (None, Some(s)) => parse_enum::<MethodArg>(s, "method")?.into(),
        (None, None) => Method::CpRvalue,
    };
    let alpha = args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
    let mut cfg = CalibrationConfig::new(method, alpha);
    cfg.estimator = match (args.estimator, &file.estimator) {
        (Some(flag), _) => flag.into(),
        (None, Some(s)) => parse_enum::<EstimatorArg>(s, "estimator")?.into(),
        (None, None) => cfg.estimator,
    };
    cfg.variance_mode = match (args.variance_mode, &file.variance_mode) {
        (Some(flag), _) => flag.into(),
        (None, Some(s)) => parse_enum::<VarianceModeArg>(s, "variance_mode")?.into(),
        (None, None) => VarianceMode::StandardError,
    };
    cfg.grid_size = args
        .grid_size
        .or(file.grid_size)
        .unwrap_or(DEFAULT_GRID_SIZE);
    Ok(cfg)
}

/// Synthetic world description for `simulate`; everything except the seed,
/// which must come from the --seed flag.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpecFile {
    pub mu: f64,
    pub tau2: f64,
    pub g_spec: GSpec,
    pub k: usize,
    pub m: usize,
    pub n_cal: usize,
    pub n_test: usize,
}

impl SimSpecFile {
    pub fn into_spec(self, seed: u64) -> GenerativeSpec {
        GenerativeSpec {
            mu: self.mu,
            tau2: self.tau2,
            g_spec: self.g_spec,
            k: self.k,
            m: self.m,
            n_cal: self.n_cal,
            n_test: self.n_test,
            true_label_rule: TrueLabelRule::default(),
            rng: RngSpec::new(seed),
        }
    }
}

pub fn load_sim_spec(path: &Path, seed: u64) -> Result<GenerativeSpec> {
    let text = std::fs::read_to_string(path)?;
    let file: SimSpecFile = toml::from_str(&text).map_err(|e| {
        Error::InvalidSpec(format!("bad spec file {}: {e}", path.display()))
    })?;
    Ok(file.into_spec(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn calibrate_args(argv: &[&str]) -> CalibrateArgs {
        let mut full = vec!["rvcp", "calibrate", "--cal", "c.tensor", "--out", "p.json"];
        full.extend_from_slice(argv);
        match crate::cli::Cli::parse_from(full).command {
            crate::cli::Command::Calibrate(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file: FileConfig = toml::from_str(
            "method = \"cp-avg\"\nalpha = 0.2\ngrid_size = 123\n",
        )
        .unwrap();
        let cfg = resolve_calibration(&calibrate_args(&["--alpha", "0.3"]), &file).unwrap();
        assert_eq!(cfg.method, Method::CpAvg); // file layer
        assert_eq!(cfg.alpha, 0.3); // flag wins
        assert_eq!(cfg.grid_size, 123); // file layer
        assert_eq!(cfg.variance_mode, VarianceMode::StandardError); // default

        let cfg = resolve_calibration(&calibrate_args(&[]), &FileConfig::default()).unwrap();
        assert_eq!(cfg.method, Method::CpRvalue);
        assert_eq!(cfg.alpha, DEFAULT_ALPHA);
        assert_eq!(cfg.grid_size, DEFAULT_GRID_SIZE);
    }

    #[test]
    fn file_enums_use_cli_spellings() {
        let file: FileConfig = toml::from_str(
            "method = \"cp-rvalue\"\nestimator = \"nonparametric\"\nvariance_mode = \"raw\"\n",
        )
        .unwrap();
        let cfg = resolve_calibration(&calibrate_args(&[]), &file).unwrap();
        assert_eq!(cfg.method, Method::CpRvalue);
        assert_eq!(cfg.estimator, rvcp_core::rvalue::Estimator::Nonparametric);
        assert_eq!(cfg.variance_mode, VarianceMode::Raw);

        let bad: FileConfig = toml::from_str("method = \"cp_rvalue\"\n").unwrap();
        let err = resolve_calibration(&calibrate_args(&[]), &bad).unwrap_err();
        assert!(err.to_string().contains("cp-rvalue"), "{err}");
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(toml::from_str::<FileConfig>("methd = \"cp\"\n").is_err());
    }

    #[test]
    fn sim_spec_round_trip() {
        let text = concat!(
            "mu = 0.0\n",
            "tau2 = 1.0\n",
            "k = 6\n",
            "m = 5\n",
            "n_cal = 60\n",
            "n_test = 40\n",
            "[g_spec]\n",
            "kind = \"two_point\"\n",
            "s1 = 0.1\n",
            "s2 = 4.0\n",
            "w = 0.2\n",
        );
        let file: SimSpecFile = toml::from_str(text).unwrap();
        let spec = file.into_spec(7);
        assert_eq!(spec.rng, RngSpec::new(7));
        assert_eq!(
            spec.g_spec,
            GSpec::TwoPoint {
                s1: 0.1,
                s2: 4.0,
                w: 0.2
            }
        );
        spec.validate().unwrap();
    }
}
