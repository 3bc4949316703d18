//! Shared data model: score tensors, per-candidate statistics, prediction
//! sets, and the deterministic randomness contract.

use serde::{Deserialize, Serialize};

/// What the raw scores are: softmax probabilities, raw logits, or generic
/// evaluator outputs. Probability scores must lie in [0,1] and their CP
/// nonconformity is `1 - p`; the other kinds use `-score`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Logit,
    Probability,
    Evaluator,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreKind::Logit => write!(f, "logit"),
            ScoreKind::Probability => write!(f, "probability"),
            ScoreKind::Evaluator => write!(f, "evaluator"),
        }
    }
}

/// How a candidate's observation variance is derived from its sample
/// variance: `Raw` feeds the sample variance itself, `StandardError` the
/// variance of the sample mean (var/M), and `Zero` forces the zero-variance
/// regime in which the parametric r-value reduces to mean-score ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    Raw,
    #[default]
    StandardError,
    Zero,
}

impl std::fmt::Display for VarianceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarianceMode::Raw => write!(f, "raw"),
            VarianceMode::StandardError => write!(f, "standard_error"),
            VarianceMode::Zero => write!(f, "zero"),
        }
    }
}

/// Conformal method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cp,
    CpAvg,
    CpRvalue,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Cp => write!(f, "cp"),
            Method::CpAvg => write!(f, "cp_avg"),
            Method::CpRvalue => write!(f, "cp_rvalue"),
        }
    }
}

/// Seed + stream pair. Identical `(seed, stream_id)` produce bit-identical
/// random sequences regardless of run, platform, or worker count; distinct
/// stream ids give independent streams under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl RngSpec {
    #[must_use]
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, stream_id: 0 }
    }

    /// The stream shifted by `offset`; used to hand each item/trial its own
    /// independent generator.
    #[must_use]
    pub fn substream(&self, offset: u64) -> Self {
        RngSpec {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }

    /// Instantiate the generator for this spec.
    #[must_use]
    pub fn rng(&self) -> rand_chacha::ChaCha12Rng {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Items x candidates x samples score array, the universal input.
///
/// `scores` is dense row-major: index `(item * K + candidate) * M + sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTensor {
    pub item_ids: Vec<String>,
    pub n_candidates: usize,
    pub n_samples: usize,
    pub scores: Vec<f64>,
    /// True-label candidate index per item, when known.
    pub true_label: Option<Vec<usize>>,
    pub score_kind: ScoreKind,
}

impl ScoreTensor {
    #[must_use]
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    /// Immutable view of one candidate's samples.
    #[must_use]
    pub fn samples(&self, item: usize, candidate: usize) -> &[f64] {
        let m = self.n_samples;
        let base = (item * self.n_candidates + candidate) * m;
        &self.scores[base..base + m]
    }

    #[must_use]
    pub fn score(&self, item: usize, candidate: usize, sample: usize) -> f64 {
        self.scores[(item * self.n_candidates + candidate) * self.n_samples + sample]
    }
}

/// One entry of a tensor validation report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub location: String,
    pub message: String,
}

/// Everything wrong with a tensor; empty iff the tensor is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    #[must_use]
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            location: location.into(),
            message: message.into(),
        });
    }
}

/// Check every structural invariant; report-based, never errors.
#[must_use]
pub fn validate_tensor(t: &ScoreTensor) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = t.n_items();
    let (k, m) = (t.n_candidates, t.n_samples);
    if k < 2 {
        report.push("tensor", format!("K = {k}; need at least 2 candidates"));
    }
    if m < 1 {
        report.push("tensor", "M = 0; need at least 1 sample");
    }
    if t.scores.len() != n * k * m {
        report.push(
            "tensor",
            format!(
                "scores length {} != n_items*K*M = {}",
                t.scores.len(),
                n * k * m
            ),
        );
        return report; // indexing below would be unsound
    }
    {
        let mut seen = std::collections::BTreeMap::new();
        for (i, id) in t.item_ids.iter().enumerate() {
            if let Some(first) = seen.insert(id.as_str(), i) {
                report.push(
                    format!("item {i}"),
                    format!("duplicate item id '{id}' (first at {first})"),
                );
            }
        }
    }
    if let Some(labels) = &t.true_label {
        if labels.len() != n {
            report.push(
                "true_label",
                format!("{} labels for {} items", labels.len(), n),
            );
        } else {
            for (i, &y) in labels.iter().enumerate() {
                if y >= k {
                    report.push(
                        format!("item {i}"),
                        format!("true_label {y} out of range [0, {k})"),
                    );
                }
            }
        }
    }
    for item in 0..n {
        for cand in 0..k {
            for (s, &v) in t.samples(item, cand).iter().enumerate() {
                if !v.is_finite() {
                    report.push(
                        format!("({item},{cand},{s})"),
                        format!("non-finite score {v}"),
                    );
                } else if t.score_kind == ScoreKind::Probability && !(0.0..=1.0).contains(&v) {
                    report.push(
                        format!("({item},{cand},{s})"),
                        format!("probability score {v} outside [0,1]"),
                    );
                }
            }
        }
    }
    report
}

/// Per-candidate summary feeding the parametric model: the observation is
/// the sample mean; its variance depends on the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateStat {
    pub mean: f64,
    /// Unbiased sample variance across the M samples; 0 when M = 1.
    pub var: f64,
    pub obs: f64,
    pub obs_var: f64,
}

/// Mean and unbiased variance of a sample slice; variance defined as 0 for a
/// single observation so M = 1 degrades to the standard-CP regime.
fn mean_var(samples: &[f64]) -> (f64, f64) {
    let m = samples.len();
    let mean = samples.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let ss = samples
        .iter()
        .map(|&x| {
            let d = x - mean;
            d * d
        })
        .sum::<f64>();
    // Rounding can leave a tiny negative sum for constant samples.
    (mean, (ss / (m - 1) as f64).max(0.0))
}

/// Summaries for one item's candidates.
#[must_use]
pub fn candidate_stats_item(t: &ScoreTensor, mode: VarianceMode, item: usize) -> Vec<CandidateStat> {
    let m = t.n_samples as f64;
    (0..t.n_candidates)
        .map(|cand| {
            let (mean, var) = mean_var(t.samples(item, cand));
            let obs_var = match mode {
                VarianceMode::Raw => var,
                VarianceMode::StandardError => var / m,
                VarianceMode::Zero => 0.0,
            };
            CandidateStat {
                mean,
                var,
                obs: mean,
                obs_var,
            }
        })
        .collect()
}

/// Summaries for every candidate of every item, row-major like the tensor.
#[must_use]
pub fn candidate_stats(t: &ScoreTensor, mode: VarianceMode) -> Vec<Vec<CandidateStat>> {
    (0..t.n_items())
        .map(|item| candidate_stats_item(t, mode, item))
        .collect()
}

/// One selected candidate with its nonconformity value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetMember {
    pub candidate: usize,
    pub nonconformity: f64,
}

/// A conformal prediction set for one item: members sorted ascending by
/// nonconformity (candidate index breaks exact ties), every member strictly
/// below the predictor threshold. May be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub item_id: String,
    pub members: Vec<SetMember>,
    pub method: Method,
}

impl PredictionSet {
    #[must_use]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[must_use]
    pub fn contains(&self, candidate: usize) -> bool {
        self.members.iter().any(|m| m.candidate == candidate)
    }

    /// 0-indexed position of `candidate` in ascending-nonconformity order.
    #[must_use]
    pub fn position(&self, candidate: usize) -> Option<usize> {
        self.members.iter().position(|m| m.candidate == candidate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(scores: Vec<f64>, n: usize, k: usize, m: usize) -> ScoreTensor {
        ScoreTensor {
            item_ids: (0..n).map(|i| format!("item-{i:03}")).collect(),
            n_candidates: k,
            n_samples: m,
            scores,
            true_label: None,
            score_kind: ScoreKind::Logit,
        }
    }

    #[test]
    fn validate_flags_nan_score() {
        let mut t = tensor(vec![0.0; 2 * 3 * 5], 2, 3, 5);
        t.scores[7] = f64::NAN;
        let report = validate_tensor(&t);
        assert_eq!(report.issues.len(), 1);
        assert!(report.issues[0].message.contains("non-finite"));
    }

    #[test]
    fn validate_flags_probability_out_of_range() {
        let mut t = tensor(vec![0.5; 2 * 2 * 2], 2, 2, 2);
        t.score_kind = ScoreKind::Probability;
        t.scores[3] = 1.3;
        let report = validate_tensor(&t);
        assert_eq!(report.issues.len(), 1);
        assert!(report.issues[0].message.contains("outside [0,1]"));
    }

    #[test]
    fn validate_accepts_well_formed_tensor() {
        let t = tensor((0..2 * 3 * 5).map(|i| i as f64 * 0.1).collect(), 2, 3, 5);
        assert!(validate_tensor(&t).is_valid());
    }

    #[test]
    fn validate_flags_duplicate_ids_and_bad_labels() {
        let mut t = tensor(vec![0.0; 2 * 2], 2, 2, 1);
        t.item_ids[1] = t.item_ids[0].clone();
        t.true_label = Some(vec![0, 2]);
        let report = validate_tensor(&t);
        let msgs: Vec<_> = report.issues.iter().map(|i| i.message.as_str()).collect();
        assert!(msgs.iter().any(|m| m.contains("duplicate item id")));
        assert!(msgs.iter().any(|m| m.contains("out of range")));
    }

    #[test]
    fn stats_two_sample_example() {
        let t = tensor(vec![1.0, 3.0], 1, 1, 2);
        // K = 1 is invalid tensor-wide but stats are still well-defined; use
        // a 2-candidate tensor to stay within contracts.
        let t2 = tensor(vec![1.0, 3.0, 5.0, 5.0], 1, 2, 2);
        drop(t);
        let raw = candidate_stats(&t2, VarianceMode::Raw);
        assert_eq!(raw[0][0].mean, 2.0);
        assert_eq!(raw[0][0].var, 2.0);
        assert_eq!(raw[0][0].obs, 2.0);
        assert_eq!(raw[0][0].obs_var, 2.0);
        let se = candidate_stats(&t2, VarianceMode::StandardError);
        assert_eq!(se[0][0].obs_var, 1.0);
        let zero = candidate_stats(&t2, VarianceMode::Zero);
        assert_eq!(zero[0][0].obs_var, 0.0);
        assert_eq!(zero[0][0].var, 2.0);
    }

    #[test]
    fn stats_single_sample_degrades() {
        let t = tensor(vec![4.0, -1.0], 1, 2, 1);
        for mode in [
            VarianceMode::Raw,
            VarianceMode::StandardError,
            VarianceMode::Zero,
        ] {
            let s = candidate_stats(&t, mode);
            assert_eq!(s[0][0].obs, 4.0);
            assert_eq!(s[0][0].var, 0.0);
            assert_eq!(s[0][0].obs_var, 0.0);
            assert_eq!(s[0][1].obs, -1.0);
        }
    }

    #[test]
    fn rng_spec_streams_are_reproducible_and_distinct() {
        use rand::RngCore;
        let a1: Vec<u64> = {
            let mut r = RngSpec { seed: 7, stream_id: 3 }.rng();
            (0..4).map(|_| r.next_u64()).collect()
        };
        let a2: Vec<u64> = {
            let mut r = RngSpec { seed: 7, stream_id: 3 }.rng();
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngSpec { seed: 7, stream_id: 4 }.rng();
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a1, a2, "same (seed, stream) must replay identically");
        assert_ne!(a1, b, "different streams must diverge");
        assert_eq!(RngSpec::new(7).substream(3).stream_id, 3);
    }
}
