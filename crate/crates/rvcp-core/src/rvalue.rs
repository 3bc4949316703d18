//! Uncertainty-aware nonconformity scores.
//!
//! The r-value of a candidate is the smallest selection level beta at which
//! the candidate would still be admitted to the top-beta set, given both its
//! observed score and how noisy that observation is. Two estimators:
//!
//! * parametric: inverts the fitted threshold family, r = inf{beta : obs >=
//!   t_beta(obs_var)};
//! * nonparametric: per-sample rank frequencies V_{k/K} compared against
//!   pooled quantile-matched bars lambda_{k/K}, r = min{k/K : V >= lambda}.
//!
//! Smaller r means a stronger, more stable candidate; r is used directly as
//! the nonconformity score downstream.

use serde::{Deserialize, Serialize};

use crate::eb::{threshold_value, ThresholdTable};
use crate::error::{Error, Result};
use crate::normal::{norm_ppf, norm_sf};
use crate::types::{CandidateStat, ScoreTensor};

/// Which r-value estimator produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Parametric,
    Nonparametric,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimator::Parametric => write!(f, "parametric"),
            Estimator::Nonparametric => write!(f, "nonparametric"),
        }
    }
}

/// Rule used to set the nonparametric bars; only quantile matching is
/// implemented (the pooled pass fraction at level k/K is made equal to k/K).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    QuantileMatching,
}

/// Item x candidate grid of r-values, all in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RValueMatrix {
    pub item_ids: Vec<String>,
    pub n_candidates: usize,
    pub estimator: Estimator,
    /// Identifier of the threshold table used (parametric only).
    pub table_ref: Option<String>,
    /// Bar-construction rule (nonparametric only).
    pub lambda_rule: Option<LambdaRule>,
    /// Row-major: `values[item * n_candidates + candidate]`.
    pub values: Vec<f64>,
}

impl RValueMatrix {
    #[must_use]
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    #[must_use]
    pub fn value(&self, item: usize, candidate: usize) -> f64 {
        self.values[item * self.n_candidates + candidate]
    }

    #[must_use]
    pub fn row(&self, item: usize) -> &[f64] {
        &self.values[item * self.n_candidates..(item + 1) * self.n_candidates]
    }
}

/// Exact zero-variance reduction: with obs_var = 0 the threshold family
/// collapses to the prior quantiles, so r = 1 - Phi((obs - mu)/tau).
///
/// Deliberately not clipped to the grid floor: the reduction must stay
/// strictly decreasing in obs so that zero-variance r-value sets coincide
/// exactly with mean-score sets (the floor would create ties among the
/// strongest candidates and break that equality). Clamped positive only to
/// keep r in (0, 1] if the survival function underflows.
#[must_use]
pub fn r_parametric_zero_var(obs: f64, mu: f64, tau2: f64) -> f64 {
    norm_sf((obs - mu) / tau2.sqrt()).max(1e-300)
}

/// Parametric r-value of one candidate: smallest beta on the table grid with
/// obs >= t_beta(obs_var), bisection-refined between adjacent grid nodes,
/// clipped to [1/(G+1), 1]. Zero-variance candidates take the exact
/// reduction path instead of the grid.
#[must_use]
pub fn r_parametric_one(obs: f64, obs_var: f64, table: &ThresholdTable) -> f64 {
    if obs_var == 0.0 {
        return r_parametric_zero_var(obs, table.mu, table.tau2);
    }
    let g = table.grid_size();
    // Nested family: t is strictly decreasing in beta at fixed obs_var
    // (enforced by table validation), so the admitting betas form an upper
    // interval and binary search finds its edge.
    if obs >= table.threshold_at(0, obs_var) {
        return table.r_floor();
    }
    if obs < table.threshold_at(g - 1, obs_var) {
        return 1.0;
    }
    let mut lo = 0; // obs < t at lo
    let mut hi = g - 1; // obs >= t at hi
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if obs >= table.threshold_at(mid, obs_var) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    refine_between(obs, obs_var, table, lo, hi)
}

/// Bisect beta in (grid[lo], grid[hi]] using the exact prior quantile and a
/// linear interpolation of z between the two solved nodes. The interpolant
/// agrees with the solved values at both ends and z is near-linear over one
/// grid step, so the refinement error is negligible next to the grid step
/// it removes.
fn refine_between(obs: f64, obs_var: f64, table: &ThresholdTable, lo: usize, hi: usize) -> f64 {
    let b0 = table.grid[lo];
    let b1 = table.grid[hi];
    let z0 = table.z[lo];
    let z1 = table.z[hi];
    let tau = table.tau2.sqrt();
    let mut blo = b0;
    let mut bhi = b1;
    for _ in 0..30 {
        let mid = 0.5 * (blo + bhi);
        let w = (mid - b0) / (b1 - b0);
        let z = z0 + w * (z1 - z0);
        let theta = table.mu + tau * norm_ppf(1.0 - mid);
        if obs >= threshold_value(theta, z, table.mu, table.tau2, obs_var) {
            bhi = mid;
        } else {
            blo = mid;
        }
    }
    bhi
}

/// Parametric r-values for one item's candidates.
#[must_use]
pub fn r_parametric_row(stats: &[CandidateStat], table: &ThresholdTable) -> Vec<f64> {
    stats
        .iter()
        .map(|s| r_parametric_one(s.obs, s.obs_var, table))
        .collect()
}

/// Parametric r-value matrix over all items.
#[must_use]
pub fn r_parametric(
    item_ids: Vec<String>,
    stats: &[Vec<CandidateStat>],
    table: &ThresholdTable,
) -> RValueMatrix {
    let n_candidates = stats.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(stats.len() * n_candidates);
    for row in stats {
        values.extend(r_parametric_row(row, table));
    }
    RValueMatrix {
        item_ids,
        n_candidates,
        estimator: Estimator::Parametric,
        table_ref: Some(format!("threshold-grid-{}", table.grid_size())),
        lambda_rule: None,
        values,
    }
}

/// Per-candidate top-k membership frequencies for one item.
///
/// For each posterior sample the candidates are ranked by descending score
/// (ties broken by ascending candidate index); V_{k/K}(i) is the fraction of
/// samples in which candidate i ranks in the top k. Profiles are
/// nondecreasing in k and end at exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFrequencyProfile {
    pub n_candidates: usize,
    /// Row-major: `v[candidate * n_candidates + (k - 1)]` holds V_{k/K}.
    pub v: Vec<f64>,
}

impl RankFrequencyProfile {
    /// V_{k/K} for `candidate`, with k 1-based.
    #[must_use]
    pub fn v_at(&self, candidate: usize, k: usize) -> f64 {
        self.v[candidate * self.n_candidates + (k - 1)]
    }
}

/// Compute one item's rank-frequency profile from its raw samples.
#[must_use]
pub fn rank_profile(t: &ScoreTensor, item: usize) -> RankFrequencyProfile {
    let k = t.n_candidates;
    let m = t.n_samples;
    // counts[cand][rank-1], flattened
    let mut counts = vec![0u32; k * k];
    let mut order: Vec<usize> = (0..k).collect();
    for sample in 0..m {
        order.sort_unstable_by(|&a, &b| {
            t.score(item, b, sample)
                .total_cmp(&t.score(item, a, sample))
                .then(a.cmp(&b))
        });
        for (pos, &cand) in order.iter().enumerate() {
            counts[cand * k + pos] += 1;
        }
    }
    let mut v = vec![0.0; k * k];
    let m_f = m as f64;
    for cand in 0..k {
        let mut cum = 0u32;
        for kk in 0..k {
            cum += counts[cand * k + kk];
            v[cand * k + kk] = f64::from(cum) / m_f;
        }
        // The last level counts every rank, so it is exactly m.
        v[cand * k + k - 1] = 1.0;
    }
    RankFrequencyProfile {
        n_candidates: k,
        v,
    }
}

/// Frozen per-level bars lambda_{k/K}, fit once on the calibration
/// population and applied unchanged to test items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTable {
    pub rule: LambdaRule,
    /// lambda[k-1] is the bar at level k/K.
    pub lambda: Vec<f64>,
}

impl LambdaTable {
    #[must_use]
    pub fn k_levels(&self) -> usize {
        self.lambda.len()
    }
}

/// Sentinel bar strictly above any attainable V (V is a fraction in [0, 1]).
/// Used at levels where every pooled value is so heavily tied that no bar
/// admits at most the target fraction; finite so tables serialize cleanly.
const LAMBDA_UNATTAINABLE: f64 = 2.0;

/// Quantile matching over the pooled reference population: at level k/K the
/// bar is the smallest pooled V value passed by at most T = k * n_items
/// candidates, so exactly a k/K fraction of pooled candidates passes when the
/// pool has no tie run straddling position T (ties resolve toward a larger
/// bar, admitting fewer candidates, never more).
pub fn fit_lambda(profiles: &[RankFrequencyProfile]) -> Result<LambdaTable> {
    let n_items = profiles.len();
    let k = match profiles.first() {
        Some(p) => p.n_candidates,
        None => return Err(Error::EmptyPopulation("no profiles to pool".into())),
    };
    if profiles.iter().any(|p| p.n_candidates != k) {
        return Err(Error::ShapeMismatch(
            "profiles with differing candidate counts cannot be pooled".into(),
        ));
    }
    if n_items * k < 2 {
        return Err(Error::EmptyPopulation(format!(
            "pooled population has {} candidates, need at least 2",
            n_items * k
        )));
    }
    let mut lambda = Vec::with_capacity(k);
    let mut pool = vec![0.0f64; n_items * k];
    for kk in 1..=k {
        let mut idx = 0;
        for p in profiles {
            for cand in 0..k {
                pool[idx] = p.v_at(cand, kk);
                idx += 1;
            }
        }
        pool.sort_unstable_by(|a, b| b.total_cmp(a));
        let t = kk * n_items; // target pass count at level kk/K
        let v_star = pool[t - 1];
        let run_start = pool.partition_point(|&x| x > v_star);
        let run_end = pool.partition_point(|&x| x >= v_star);
        lambda.push(if run_end == t {
            v_star
        } else if run_start == 0 {
            LAMBDA_UNATTAINABLE
        } else {
            // smallest distinct pooled value above the straddling tie run
            pool[run_start - 1]
        });
    }
    Ok(LambdaTable {
        rule: LambdaRule::QuantileMatching,
        lambda,
    })
}

/// Nonparametric r-values for one item against frozen bars:
/// r = min{k/K : V_{k/K} >= lambda_{k/K}}. The top level always passes
/// (V = lambda = 1), so r = 1 is the worst case rather than a sentinel.
pub fn r_nonparametric_row(profile: &RankFrequencyProfile, bars: &LambdaTable) -> Result<Vec<f64>> {
    let k = profile.n_candidates;
    if bars.k_levels() != k {
        return Err(Error::ShapeMismatch(format!(
            "bar table has {} levels but profile has {} candidates",
            bars.k_levels(),
            k
        )));
    }
    let k_f = k as f64;
    let mut out = Vec::with_capacity(k);
    for cand in 0..k {
        let mut r = 1.0;
        for kk in 1..=k {
            if profile.v_at(cand, kk) >= bars.lambda[kk - 1] {
                r = kk as f64 / k_f;
                break;
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Pooled convenience form: fit bars on these profiles and evaluate the same
/// profiles against them (exactly what calibration does to its own items).
pub fn r_nonparametric(
    item_ids: Vec<String>,
    profiles: &[RankFrequencyProfile],
) -> Result<RValueMatrix> {
    let bars = fit_lambda(profiles)?;
    let n_candidates = profiles.first().map_or(0, |p| p.n_candidates);
    let mut values = Vec::with_capacity(profiles.len() * n_candidates);
    for p in profiles {
        values.extend(r_nonparametric_row(p, &bars)?);
    }
    Ok(RValueMatrix {
        item_ids,
        n_candidates,
        estimator: Estimator::Nonparametric,
        table_ref: None,
        lambda_rule: Some(LambdaRule::QuantileMatching),
        values,
    })
}

#[cfg(test)]
// index loops here cross-reference parallel structures; zips would obscure
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::eb::{build_threshold_table, EBModel};
    use crate::types::ScoreKind;

    fn std_table() -> ThresholdTable {
        let m = EBModel::from_parts(0.0, 1.0, vec![1.0]);
        build_threshold_table(&m, 999).unwrap()
    }

    /// (item*K + cand)*M + sample layout, evaluator scores, no labels.
    fn tensor(k: usize, m: usize, per_item: &[Vec<Vec<f64>>]) -> ScoreTensor {
        let mut scores = Vec::new();
        for item in per_item {
            assert_eq!(item.len(), k);
            for cand in item {
                assert_eq!(cand.len(), m);
                scores.extend_from_slice(cand);
            }
        }
        ScoreTensor {
            item_ids: (0..per_item.len()).map(|i| format!("i{i}")).collect(),
            n_candidates: k,
            n_samples: m,
            scores,
            true_label: None,
            score_kind: ScoreKind::Evaluator,
        }
    }

    const THETA_005: f64 = 1.644853626951472714864;

    #[test]
    fn zero_variance_exact_reduction() {
        let table = std_table();
        // obs at the 0.05 prior quantile recovers beta = 0.05 exactly
        let r = r_parametric_one(THETA_005, 0.0, &table);
        assert!((r - 0.05).abs() < 1e-12, "r = {r}");
        // arbitrary obs: oracle survival values (mpmath, 50 digits)
        let r = r_parametric_one(1.5, 0.0, &table);
        assert!((r - 0.06680720126885806600449).abs() < 1e-13);
        let m = EBModel::from_parts(1.0, 4.0, vec![1.0]);
        let t4 = build_threshold_table(&m, 999).unwrap();
        let r = r_parametric_one(-2.0, 0.0, &t4);
        assert!((r - 0.9331927987311419339955).abs() < 1e-13);
        // strictly decreasing in obs, below the grid floor included
        let hi = r_parametric_one(4.0, 0.0, &table);
        let hi2 = r_parametric_one(4.1, 0.0, &table);
        assert!(hi2 < hi && hi < 1.0 / 1000.0);
    }

    #[test]
    fn grid_inversion_recovers_threshold_example() {
        let table = std_table();
        // obs placed exactly on t_{0.05}(1): oracle threshold value
        let r = r_parametric_one(2.326174307353348173453, 1.0, &table);
        assert!((r - 0.05).abs() < 1e-6, "r = {r}");
        // slightly larger obs admits a slightly smaller beta
        let r2 = r_parametric_one(2.3262, 1.0, &table);
        assert!(r2 < 0.05 && (r2 - 0.05).abs() < 1e-3, "r2 = {r2}");
    }

    #[test]
    fn grid_extremes_clip_and_saturate() {
        let table = std_table();
        assert_eq!(r_parametric_one(50.0, 1.0, &table), 1.0 / 1000.0);
        assert_eq!(r_parametric_one(-50.0, 1.0, &table), 1.0);
        // everything stays in (0, 1]
        for obs in [-10.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
            for var in [0.0, 0.3, 1.0, 9.0] {
                let r = r_parametric_one(obs, var, &table);
                assert!(r > 0.0 && r <= 1.0, "r({obs},{var}) = {r}");
            }
        }
    }

    #[test]
    fn parametric_monotone_in_obs_at_fixed_variance() {
        let table = std_table();
        for var in [0.0, 0.5, 2.0] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let obs = -4.0 + i as f64 * 0.04;
                let r = r_parametric_one(obs, var, &table);
                assert!(r <= prev + 1e-12, "r not nonincreasing at obs={obs}");
                prev = r;
            }
        }
    }

    #[test]
    fn refinement_matches_direct_solve() {
        // Against an independent fine-grid scan: r from the production path
        // vs the smallest beta on a 1e6-point grid with obs >= t_beta.
        let m = EBModel::from_parts(0.0, 1.0, vec![1.0]);
        let table = build_threshold_table(&m, 999).unwrap();
        let c = std::f64::consts::SQRT_2 - 1.0; // z = c * theta for this g
        for &(obs, s) in &[(1.7, 1.0), (0.4, 0.25), (2.9, 3.0), (-0.8, 1.5)] {
            let r = r_parametric_one(obs, s, &table);
            let mut scan = 1.0;
            for j in 1..1_000_000u32 {
                let beta = f64::from(j) / 1e6;
                let theta = norm_ppf(1.0 - beta);
                let t = theta * (1.0 + s) - c * theta * (s * (s + 1.0)).sqrt();
                if obs >= t {
                    scan = beta;
                    break;
                }
            }
            assert!(
                (r - scan).abs() < 5e-6,
                "obs={obs} s={s}: refined {r} vs scanned {scan}"
            );
        }
    }

    #[test]
    fn profile_single_sample() {
        let t = tensor(2, 1, &[vec![vec![5.0], vec![3.0]]]);
        let p = rank_profile(&t, 0);
        assert_eq!(p.v, vec![1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn profile_two_samples_mixed_ranks() {
        // candidate 0 ranks 1st in sample 0 and 3rd in sample 1
        let t = tensor(
            3,
            2,
            &[vec![vec![3.0, 0.0], vec![2.0, 5.0], vec![1.0, 4.0]]],
        );
        let p = rank_profile(&t, 0);
        assert_eq!(
            (p.v_at(0, 1), p.v_at(0, 2), p.v_at(0, 3)),
            (0.5, 0.5, 1.0)
        );
    }

    #[test]
    fn profile_tie_goes_to_lower_index() {
        let t = tensor(3, 1, &[vec![vec![1.0], vec![1.0], vec![0.5]]]);
        let p = rank_profile(&t, 0);
        assert_eq!(p.v_at(0, 1), 1.0);
        assert_eq!(p.v_at(1, 1), 0.0);
        assert_eq!(p.v_at(1, 2), 1.0);
        assert_eq!(p.v_at(2, 2), 0.0);
    }

    #[test]
    fn profiles_nondecreasing_and_end_at_one() {
        let t = tensor(
            4,
            3,
            &[
                vec![
                    vec![9.0, 8.0, 7.0],
                    vec![5.0, 9.5, 1.0],
                    vec![4.0, 3.0, 6.5],
                    vec![1.0, 2.0, 8.0],
                ],
                vec![
                    vec![2.0, 2.0, 2.0],
                    vec![2.0, 1.0, 3.0],
                    vec![0.0, 0.0, 5.0],
                    vec![1.0, 3.0, 0.0],
                ],
            ],
        );
        for item in 0..2 {
            let p = rank_profile(&t, item);
            for cand in 0..4 {
                for k in 2..=4 {
                    assert!(p.v_at(cand, k) >= p.v_at(cand, k - 1));
                }
                assert_eq!(p.v_at(cand, 4), 1.0);
            }
        }
    }

    /// Straightforward reimplementation of the whole nonparametric
    /// definition with plain sorts, used as an oracle for the production
    /// path.
    fn naive_r(t: &ScoreTensor) -> Vec<Vec<f64>> {
        let (n, k, m) = (t.n_items(), t.n_candidates, t.n_samples);
        // ranks[item][cand][sample]
        let mut v = vec![vec![vec![0.0; k]; k]; n]; // v[item][cand][k-1]
        for item in 0..n {
            for sample in 0..m {
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&a, &b| {
                    t.score(item, b, sample)
                        .partial_cmp(&t.score(item, a, sample))
                        .unwrap()
                        .then(a.cmp(&b))
                });
                for (pos, &cand) in order.iter().enumerate() {
                    for kk in pos..k {
                        v[item][cand][kk] += 1.0 / m as f64;
                    }
                }
            }
        }
        let mut lambda = vec![0.0; k];
        for kk in 0..k {
            let pool: Vec<f64> = (0..n)
                .flat_map(|i| (0..k).map(move |c| (i, c)))
                .map(|(i, c)| v[i][c][kk])
                .collect();
            // smallest pooled value passed by at most (kk+1)*n candidates
            let mut vals = pool.clone();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            lambda[kk] = vals
                .iter()
                .copied()
                .find(|&bar| pool.iter().filter(|&&x| x >= bar).count() <= (kk + 1) * n)
                .unwrap_or(2.0);
        }
        (0..n)
            .map(|i| {
                (0..k)
                    .map(|c| {
                        (0..k)
                            .find(|&kk| v[i][c][kk] >= lambda[kk])
                            .map_or(1.0, |kk| (kk + 1) as f64 / k as f64)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn nonparametric_matches_naive_oracle_and_hand_values() {
        let t = tensor(
            4,
            3,
            &[
                vec![
                    vec![9.0, 8.0, 7.0],
                    vec![5.0, 9.5, 1.0],
                    vec![4.0, 3.0, 6.5],
                    vec![1.0, 2.0, 8.0],
                ],
                vec![
                    vec![2.0, 2.0, 2.0],
                    vec![2.0, 1.0, 3.0],
                    vec![0.0, 0.0, 5.0],
                    vec![1.0, 3.0, 0.0],
                ],
            ],
        );
        let profiles: Vec<_> = (0..2).map(|i| rank_profile(&t, i)).collect();
        let got = r_nonparametric(t.item_ids.clone(), &profiles).unwrap();
        let want = naive_r(&t);
        for item in 0..2 {
            for cand in 0..4 {
                assert_eq!(
                    got.value(item, cand),
                    want[item][cand],
                    "mismatch at item {item} cand {cand}"
                );
            }
        }
        // worked by hand from the rank tables: the level-1 pool is a
        // six-way tie at 1/3 with nothing above it, so level 1 admits
        // nobody; levels 2 and 3 hit their target counts exactly
        assert_eq!(got.row(0), &[0.5, 0.5, 0.75, 1.0]);
        assert_eq!(got.row(1), &[0.5, 0.5, 1.0, 0.75]);
    }

    #[test]
    fn sole_top_candidate_gets_lowest_level() {
        // item 0's candidate 0 and item 1's candidate 1 are each always
        // ranked first; both pass the k=1 bar, nobody else does.
        let t = tensor(
            3,
            2,
            &[
                vec![vec![9.0, 9.0], vec![1.0, 2.0], vec![2.0, 1.0]],
                vec![vec![1.0, 2.0], vec![9.0, 9.0], vec![2.0, 1.0]],
            ],
        );
        let profiles: Vec<_> = (0..2).map(|i| rank_profile(&t, i)).collect();
        let r = r_nonparametric(t.item_ids.clone(), &profiles).unwrap();
        assert_eq!(r.value(0, 0), 1.0 / 3.0);
        assert_eq!(r.value(1, 1), 1.0 / 3.0);
        assert!(r.value(0, 1) > 1.0 / 3.0);
        assert!(r.value(0, 2) > 1.0 / 3.0);
    }

    #[test]
    fn identical_scores_fall_back_to_index_order() {
        // With every score equal the tie rule makes candidate i rank i+1
        // in every sample, so r_i = (i+1)/K identically across items; the
        // point is that nothing random or item-dependent sneaks in.
        let row = vec![vec![1.0, 1.0]; 3];
        let t = tensor(3, 2, &[row.clone(), row]);
        let profiles: Vec<_> = (0..2).map(|i| rank_profile(&t, i)).collect();
        let r = r_nonparametric(t.item_ids.clone(), &profiles).unwrap();
        for item in 0..2 {
            for cand in 0..3 {
                assert_eq!(r.value(item, cand), (cand + 1) as f64 / 3.0);
            }
        }
    }

    #[test]
    fn lambda_pass_counts_match_levels() {
        // The pass count at level k never exceeds k * n_items, and hits it
        // exactly whenever no tie run straddles the target position.
        use rand::Rng;
        let mut rng = crate::types::RngSpec::new(4242).rng();
        let k = 3;
        let m = 997;
        let n = 5;
        let items: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        let base: f64 = rng.gen_range(-2.0..2.0);
                        (0..m).map(|_| base + rng.gen_range(-1.0..1.0)).collect()
                    })
                    .collect()
            })
            .collect();
        let t = tensor(k, m, &items);
        let profiles: Vec<_> = (0..n).map(|i| rank_profile(&t, i)).collect();
        let bars = fit_lambda(&profiles).unwrap();
        for kk in 1..=k {
            let mut pool: Vec<f64> = profiles
                .iter()
                .flat_map(|p| (0..k).map(move |c| p.v_at(c, kk)))
                .collect();
            let pass = pool.iter().filter(|&&v| v >= bars.lambda[kk - 1]).count();
            let target = kk * n;
            assert!(pass <= target, "level {kk}: pass {pass} > {target}");
            pool.sort_by(|a, b| b.total_cmp(a));
            let straddle_free = pool.iter().filter(|&&v| v >= pool[target - 1]).count() == target;
            if straddle_free {
                assert_eq!(pass, target, "level {kk} must match exactly");
            }
        }
        // the coarsest level admits the whole pool
        let pass_top = profiles
            .iter()
            .flat_map(|p| (0..k).map(move |c| p.v_at(c, k)))
            .filter(|&v| v >= bars.lambda[k - 1])
            .count();
        assert_eq!(pass_top, k * n);
    }

    #[test]
    fn degenerate_populations_error() {
        assert!(matches!(
            fit_lambda(&[]),
            Err(Error::EmptyPopulation(_))
        ));
        let t = tensor(1, 1, &[vec![vec![1.0]]]);
        let p = rank_profile(&t, 0);
        assert!(matches!(
            fit_lambda(&[p]),
            Err(Error::EmptyPopulation(_))
        ));
    }

    #[test]
    fn bar_profile_shape_mismatch_errors() {
        let t2 = tensor(2, 1, &[vec![vec![1.0], vec![0.0]], vec![vec![1.0], vec![0.0]]]);
        let t3 = tensor(
            3,
            1,
            &[vec![vec![1.0], vec![0.0], vec![2.0]]],
        );
        let bars = fit_lambda(&(0..2).map(|i| rank_profile(&t2, i)).collect::<Vec<_>>()).unwrap();
        let p3 = rank_profile(&t3, 0);
        assert!(matches!(
            r_nonparametric_row(&p3, &bars),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn matrix_accessors() {
        let table = std_table();
        let stats: Vec<Vec<CandidateStat>> = vec![
            vec![
                CandidateStat { mean: 1.0, var: 0.0, obs: 1.0, obs_var: 0.5 },
                CandidateStat { mean: -1.0, var: 0.0, obs: -1.0, obs_var: 0.5 },
            ],
        ];
        let m = r_parametric(vec!["a".into()], &stats, &table);
        assert_eq!(m.n_items(), 1);
        assert_eq!(m.row(0).len(), 2);
        assert!(m.value(0, 0) < m.value(0, 1));
        assert_eq!(m.estimator, Estimator::Parametric);
        assert!(m.table_ref.as_deref() == Some("threshold-grid-999"));
    }
}
