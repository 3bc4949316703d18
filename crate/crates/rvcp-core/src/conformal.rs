//! Split-conformal calibration, prediction, and evaluation.
//!
//! Three methods share one interface, differing only in the nonconformity
//! score:
//!
//! * `cp`: one fixed posterior sample per candidate (lower score = less
//!   conforming after orientation);
//! * `cp_avg`: the per-candidate mean over samples;
//! * `cp_rvalue`: the r-value itself, which folds in observation noise.
//!
//! Calibration picks the threshold as the ceil((n+1)(1-alpha))-th smallest
//! true-label nonconformity; prediction admits a candidate iff its
//! nonconformity is strictly below the threshold. Lower always means more
//! conforming.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eb::{build_threshold_table, fit_eb, EBModel, ThresholdTable, DEFAULT_GRID_SIZE};
use crate::error::{Error, Result};
use crate::rvalue::{
    fit_lambda, r_nonparametric_row, r_parametric_row, r_parametric_zero_var, rank_profile,
    Estimator, LambdaTable,
};
use crate::types::{
    candidate_stats, candidate_stats_item, Method, PredictionSet, ScoreKind, ScoreTensor,
    SetMember, VarianceMode,
};

/// Knobs for [`calibrate`]; construct with [`CalibrationConfig::new`] and
/// override fields as needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub method: Method,
    pub alpha: f64,
    /// Which r-value estimator `cp_rvalue` uses.
    pub estimator: Estimator,
    /// How per-candidate observation variance is derived (`cp_rvalue`,
    /// parametric estimator only).
    pub variance_mode: VarianceMode,
    /// Beta-grid size of the parametric threshold table.
    pub grid_size: usize,
    /// Which posterior sample the `cp` baseline reads.
    pub sample_index: usize,
}

impl CalibrationConfig {
    #[must_use]
    pub fn new(method: Method, alpha: f64) -> Self {
        CalibrationConfig {
            method,
            alpha,
            estimator: Estimator::Parametric,
            variance_mode: VarianceMode::StandardError,
            grid_size: DEFAULT_GRID_SIZE,
            sample_index: 0,
        }
    }
}

/// Everything frozen at calibration time; sufficient to reproduce
/// prediction exactly (and serialized wholesale by the persistence layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedPredictor {
    pub method: Method,
    pub alpha: f64,
    /// The calibration order statistic, on the nonconformity scale of the
    /// method (an r-value for `cp_rvalue`, an oriented score otherwise).
    pub threshold: f64,
    pub n_cal: usize,
    pub score_kind: ScoreKind,
    pub n_candidates: usize,
    /// `cp` only: which sample was scored.
    pub sample_index: Option<usize>,
    /// `cp_rvalue` only.
    pub estimator: Option<Estimator>,
    /// `cp_rvalue` + parametric only.
    pub variance_mode: Option<VarianceMode>,
    pub model: Option<EBModel>,
    /// Absent when the fitted variance distribution is identically zero;
    /// prediction then takes the exact zero-variance reduction.
    pub table: Option<ThresholdTable>,
    /// `cp_rvalue` + nonparametric only.
    pub bars: Option<LambdaTable>,
}

/// Calibration rank: the 1-indexed position of the threshold order
/// statistic, ceil((n+1)(1-alpha)). Errors when the rank exceeds n (too few
/// calibration items for the requested alpha).
pub fn calibration_rank(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let exact = (n + 1) as f64 * (1.0 - alpha);
    // Nudge below the fp product so exact integers (e.g. 20 * 0.95) do not
    // get rounded up by the representation error of 1 - alpha.
    let rank = (exact - 1e-9).ceil().max(1.0) as usize;
    if rank > n {
        return Err(Error::InsufficientCalibration { n, alpha, rank });
    }
    Ok(rank)
}

/// Orient a raw score so that lower = more conforming: probabilities turn
/// into 1 - p, logit and evaluator scores are negated.
#[inline]
#[must_use]
pub fn orient(score: f64, kind: ScoreKind) -> f64 {
    match kind {
        ScoreKind::Probability => 1.0 - score,
        ScoreKind::Logit | ScoreKind::Evaluator => -score,
    }
}

impl CalibratedPredictor {
    /// Per-candidate nonconformity for one item of a tensor, using the
    /// frozen artifacts. Lower = more conforming for every method.
    pub fn nonconformity(&self, t: &ScoreTensor, item: usize) -> Result<Vec<f64>> {
        match self.method {
            Method::Cp => {
                let s = self.sample_index.unwrap_or(0);
                if s >= t.n_samples {
                    return Err(Error::MissingSample {
                        requested: s,
                        available: t.n_samples,
                    });
                }
                Ok((0..t.n_candidates)
                    .map(|c| orient(t.score(item, c, s), self.score_kind))
                    .collect())
            }
            Method::CpAvg => {
                let stats = candidate_stats_item(t, VarianceMode::Zero, item);
                Ok(stats
                    .iter()
                    .map(|st| orient(st.obs, self.score_kind))
                    .collect())
            }
            Method::CpRvalue => match self.estimator {
                Some(Estimator::Nonparametric) => {
                    let bars = self
                        .bars
                        .as_ref()
                        .ok_or_else(|| Error::InvalidSpec("predictor lacks bar table".into()))?;
                    r_nonparametric_row(&rank_profile(t, item), bars)
                }
                _ => {
                    let model = self
                        .model
                        .as_ref()
                        .ok_or_else(|| Error::InvalidSpec("predictor lacks model".into()))?;
                    let mode = self.variance_mode.unwrap_or_default();
                    let stats = candidate_stats_item(t, mode, item);
                    Ok(match &self.table {
                        Some(table) => r_parametric_row(&stats, table),
                        None => stats
                            .iter()
                            .map(|st| r_parametric_zero_var(st.obs, model.mu, model.tau2))
                            .collect(),
                    })
                }
            },
        }
    }
}

fn check_labels(t: &ScoreTensor) -> Result<&[usize]> {
    let labels = t
        .true_label
        .as_deref()
        .ok_or_else(|| Error::MissingLabels("tensor has no true labels".into()))?;
    if let Some(&bad) = labels.iter().find(|&&l| l >= t.n_candidates) {
        return Err(Error::ShapeMismatch(format!(
            "true label {bad} out of range for {} candidates",
            t.n_candidates
        )));
    }
    Ok(labels)
}

/// Fit the frozen artifacts and pick the threshold from the calibration
/// tensor's true-label nonconformity scores.
pub fn calibrate(t: &ScoreTensor, cfg: &CalibrationConfig) -> Result<CalibratedPredictor> {
    let labels = check_labels(t)?;
    let n = t.n_items();
    if n == 0 {
        return Err(Error::EmptyPopulation("calibration tensor is empty".into()));
    }
    let rank = calibration_rank(n, cfg.alpha)?;

    let mut pred = CalibratedPredictor {
        method: cfg.method,
        alpha: cfg.alpha,
        threshold: f64::NAN,
        n_cal: n,
        score_kind: t.score_kind,
        n_candidates: t.n_candidates,
        sample_index: (cfg.method == Method::Cp).then_some(cfg.sample_index),
        estimator: (cfg.method == Method::CpRvalue).then_some(cfg.estimator),
        variance_mode: None,
        model: None,
        table: None,
        bars: None,
    };

    match cfg.method {
        Method::Cp => {
            if cfg.sample_index >= t.n_samples {
                return Err(Error::MissingSample {
                    requested: cfg.sample_index,
                    available: t.n_samples,
                });
            }
        }
        Method::CpAvg => {}
        Method::CpRvalue => match cfg.estimator {
            Estimator::Parametric => {
                let stats = candidate_stats(t, cfg.variance_mode);
                // Forcing variances to zero is a deliberate reduction, not
                // a data defect, so only the non-forced modes reject an
                // all-zero variance pool.
                let variance_aware = cfg.variance_mode != VarianceMode::Zero;
                let model = fit_eb(stats.iter().flatten(), variance_aware)?;
                if model.has_positive_variance() {
                    pred.table = Some(build_threshold_table(&model, cfg.grid_size)?);
                }
                pred.model = Some(model);
                pred.variance_mode = Some(cfg.variance_mode);
            }
            Estimator::Nonparametric => {
                let profiles: Vec<_> = (0..n).map(|i| rank_profile(t, i)).collect();
                pred.bars = Some(fit_lambda(&profiles)?);
            }
        },
    }

    let mut scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|item| {
            pred.nonconformity(t, item)
                .map(|row| row[labels[item]])
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_unstable_by(f64::total_cmp);
    pred.threshold = scores[rank - 1];
    Ok(pred)
}

/// Prediction sets for every item of a test tensor: candidate included iff
/// nonconformity < threshold (strict), members sorted ascending by
/// nonconformity with ties broken by candidate index.
pub fn predict(pred: &CalibratedPredictor, t: &ScoreTensor) -> Result<Vec<PredictionSet>> {
    if t.n_candidates != pred.n_candidates {
        return Err(Error::ShapeMismatch(format!(
            "predictor expects {} candidates, tensor has {}",
            pred.n_candidates, t.n_candidates
        )));
    }
    if t.score_kind != pred.score_kind {
        return Err(Error::ShapeMismatch(format!(
            "predictor was calibrated on {} scores, tensor holds {}",
            pred.score_kind, t.score_kind
        )));
    }
    (0..t.n_items())
        .into_par_iter()
        .map(|item| {
            let row = pred.nonconformity(t, item)?;
            let mut members: Vec<SetMember> = row
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v < pred.threshold)
                .map(|(candidate, &nonconformity)| SetMember {
                    candidate,
                    nonconformity,
                })
                .collect();
            members.sort_unstable_by(|a, b| {
                a.nonconformity
                    .total_cmp(&b.nonconformity)
                    .then(a.candidate.cmp(&b.candidate))
            });
            Ok(PredictionSet {
                item_id: t.item_ids[item].clone(),
                members,
                method: pred.method,
            })
        })
        .collect()
}

/// Outcome of one evaluated item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub set_size: usize,
    pub covered: bool,
    /// 0-indexed position of the true label in the ascending-nonconformity
    /// order; present only when covered.
    pub true_index: Option<usize>,
}

/// Aggregate metrics over a batch of prediction sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_items: usize,
    /// Fraction of items whose true label is in the set.
    pub coverage: f64,
    pub mean_set_size: f64,
    /// Sample standard deviation of set sizes (0 for a single item).
    pub sd_set_size: f64,
    /// Mean true-label position among covered items; absent when nothing
    /// was covered.
    pub mean_true_index: Option<f64>,
    pub n_empty_sets: usize,
    pub items: Vec<ItemOutcome>,
}

/// Score prediction sets against true labels, in set order.
pub fn evaluate(sets: &[PredictionSet], labels: &[usize]) -> Result<EvalReport> {
    if sets.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sets but {} labels",
            sets.len(),
            labels.len()
        )));
    }
    if sets.is_empty() {
        return Err(Error::EmptyPopulation("nothing to evaluate".into()));
    }
    let items: Vec<ItemOutcome> = sets
        .iter()
        .zip(labels)
        .map(|(set, &label)| {
            let true_index = set.position(label);
            ItemOutcome {
                item_id: set.item_id.clone(),
                set_size: set.len(),
                covered: true_index.is_some(),
                true_index,
            }
        })
        .collect();
    let n = items.len();
    let n_f = n as f64;
    let coverage = items.iter().filter(|i| i.covered).count() as f64 / n_f;
    let mean_set_size = items.iter().map(|i| i.set_size as f64).sum::<f64>() / n_f;
    let sd_set_size = if n >= 2 {
        (items
            .iter()
            .map(|i| {
                let d = i.set_size as f64 - mean_set_size;
                d * d
            })
            .sum::<f64>()
            / (n_f - 1.0))
            .sqrt()
    } else {
        0.0
    };
    let covered_indices: Vec<f64> = items
        .iter()
        .filter_map(|i| i.true_index.map(|x| x as f64))
        .collect();
    let mean_true_index = if covered_indices.is_empty() {
        None
    } else {
        Some(covered_indices.iter().sum::<f64>() / covered_indices.len() as f64)
    };
    let n_empty_sets = items.iter().filter(|i| i.set_size == 0).count();
    Ok(EvalReport {
        n_items: n,
        coverage,
        mean_set_size,
        sd_set_size,
        mean_true_index,
        n_empty_sets,
        items,
    })
}
