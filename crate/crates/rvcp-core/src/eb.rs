//! Normal-Normal empirical-Bayes engine.
//!
//! Latent scores follow theta ~ N(mu, tau^2); each observation is
//! obs | theta ~ N(theta, obs_var) with obs_var drawn from an unknown
//! variance distribution g. This module fits (mu, tau^2, g) by method of
//! moments, exposes the conjugate posterior, and builds the
//! variance-dependent threshold family
//!
//! ```text
//! t_beta(s) = theta_beta (1 + s/tau^2) - mu s/tau^2 - z_beta sqrt(s) sqrt(s + tau^2) / tau
//! ```
//!
//! where theta_beta = mu + tau PhiInv(1-beta) and z_beta solves the marginal
//! selection constraint
//!
//! ```text
//! E_g[ 1 - Phi( theta_std sqrt(1 + s/tau^2) - z sqrt(s/tau^2) ) ] = beta.
//! ```
//!
//! All solver work happens in standardized units ((x - mu)/tau, variances
//! divided by tau^2), where the family takes the textbook form
//! t'(s') = theta'(1+s') - z sqrt(s'(s'+1)); results map back affinely. The
//! two routes agree to all 64-bit digits (checked in tests), so only the
//! standardized formulas are implemented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_cdf_pdf, norm_ppf};
use crate::types::CandidateStat;

/// Method-of-moments tau^2 estimates are clipped here instead of erroring.
pub const TAU2_FLOOR: f64 = 1e-8;

/// Default beta-grid size for threshold tables; r-values quantize to
/// ~1/(G+1) before refinement.
pub const DEFAULT_GRID_SIZE: usize = 999;

/// Default cap on the number of support points the constraint integral is
/// evaluated over. Larger empirical supports are compressed to this many
/// equal-mass groups (each represented by its mean); supports at or under
/// the cap are used exactly. See `GEval`.
pub const DEFAULT_MAX_EVAL_SUPPORT: usize = 1024;

/// Residual tolerance the z solver drives the constraint to.
const Z_RESIDUAL_TOL: f64 = 1e-13;
const Z_MAX_ITER: usize = 200;

/// Raw moment values behind the fit plus which floors fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_pooled: usize,
    /// Unbiased variance of the pooled observations.
    pub var_obs: f64,
    /// Mean of the pooled obs_var values.
    pub mean_obs_var: f64,
    pub tau2_floored: bool,
}

/// Fitted prior: mu, tau^2, and the plug-in variance distribution g as the
/// equal-weight multiset of observed obs_var values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EBModel {
    pub mu: f64,
    pub tau2: f64,
    /// Sorted ascending; equal weights. May be all zeros only in the
    /// degenerate regime, in which threshold tables cannot be built and
    /// callers fall back to the zero-variance reduction.
    pub g_support: Vec<f64>,
    pub fit_diagnostics: FitDiagnostics,
}

impl EBModel {
    #[must_use]
    pub fn tau(&self) -> f64 {
        self.tau2.sqrt()
    }

    /// True when g has at least one strictly positive entry, i.e. the
    /// variance-aware machinery is usable.
    #[must_use]
    pub fn has_positive_variance(&self) -> bool {
        self.g_support.last().is_some_and(|&s| s > 0.0)
    }

    /// Construct a model directly from parameters (simulator oracles and
    /// tests); support is sorted, diagnostics synthesized.
    #[must_use]
    pub fn from_parts(mu: f64, tau2: f64, mut g_support: Vec<f64>) -> Self {
        g_support.sort_by(f64::total_cmp);
        let n = g_support.len();
        let mean_obs_var = if n == 0 {
            0.0
        } else {
            g_support.iter().sum::<f64>() / n as f64
        };
        EBModel {
            mu,
            tau2: tau2.max(TAU2_FLOOR),
            g_support,
            fit_diagnostics: FitDiagnostics {
                n_pooled: n,
                var_obs: f64::NAN,
                mean_obs_var,
                tau2_floored: tau2 < TAU2_FLOOR,
            },
        }
    }
}

/// Method-of-moments fit over all pooled candidates:
/// mu = mean(obs), tau^2 = max(var(obs) - mean(obs_var), floor),
/// g = multiset of obs_var.
///
/// With `variance_aware` set, an all-zero variance pool is an error so the
/// caller can fall back to the zero-variance reduction explicitly.
pub fn fit_eb<'a, I>(stats: I, variance_aware: bool) -> Result<EBModel>
where
    I: IntoIterator<Item = &'a CandidateStat>,
{
    let mut obs = Vec::new();
    let mut g_support = Vec::new();
    for s in stats {
        obs.push(s.obs);
        g_support.push(s.obs_var);
    }
    let n = obs.len();
    if n < 2 {
        return Err(Error::EmptyPopulation(format!(
            "empirical-Bayes fit needs at least 2 pooled candidates, got {n}"
        )));
    }
    let mu = obs.iter().sum::<f64>() / n as f64;
    let var_obs = obs
        .iter()
        .map(|&x| {
            let d = x - mu;
            d * d
        })
        .sum::<f64>()
        / (n - 1) as f64;
    let mean_obs_var = g_support.iter().sum::<f64>() / n as f64;
    if variance_aware && g_support.iter().all(|&s| s == 0.0) {
        return Err(Error::AllZeroVariance);
    }
    let raw_tau2 = var_obs - mean_obs_var;
    let tau2_floored = raw_tau2 < TAU2_FLOOR;
    g_support.sort_by(f64::total_cmp);
    Ok(EBModel {
        mu,
        tau2: raw_tau2.max(TAU2_FLOOR),
        g_support,
        fit_diagnostics: FitDiagnostics {
            n_pooled: n,
            var_obs,
            mean_obs_var,
            tau2_floored,
        },
    })
}

/// Conjugate posterior of theta given one observation:
/// mean (tau^2 obs + s mu)/(tau^2 + s), variance tau^2 s/(tau^2 + s).
/// An exact observation (s = 0) returns (obs, 0) with no roundoff; the
/// general formula would re-round the mean through t2 * obs / t2.
#[must_use]
pub fn posterior(obs: f64, obs_var: f64, model: &EBModel) -> (f64, f64) {
    if obs_var == 0.0 {
        return (obs, 0.0);
    }
    let t2 = model.tau2;
    let denom = t2 + obs_var;
    (
        (t2 * obs + obs_var * model.mu) / denom,
        t2 * obs_var / denom,
    )
}

/// theta_beta = mu + tau PhiInv(1 - beta), the (1-beta) prior quantile.
pub fn theta_quantile(beta: f64, model: &EBModel) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    Ok(model.mu + model.tau() * norm_ppf(1.0 - beta))
}

/// The constraint integrand support in standardized units, precomputed for
/// fast repeated evaluation: F(u; theta') = sum_j w_j Phi(theta' a_j - u b_j)
/// with a_j = sqrt(1 + s'_j), b_j = sqrt(s'_j).
///
/// Supports larger than a cap are compressed into equal-mass groups, each
/// replaced by its mean (weights stay uniform up to the ragged last group).
/// Group widths on realistic calibration supports are tiny, so the induced
/// shift in the solved z is far below the residual tolerances; the residual
/// invariants elsewhere are all evaluated against this same compressed F,
/// keeping the contracts internally consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEval {
    /// Standardized variances s' = s/tau^2, ascending.
    pub values: Vec<f64>,
    /// Matching weights, summing to 1.
    pub weights: Vec<f64>,
    #[serde(skip)]
    cache: GEvalCache,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct GEvalCache {
    sqrt_1p: Vec<f64>,
    sqrt_s: Vec<f64>,
}

impl GEval {
    /// Build from raw (original-units) support values; `tau2` standardizes,
    /// `max_support` caps the evaluation size (0 = exact, no compression).
    pub fn new(sorted_support: &[f64], tau2: f64, max_support: usize) -> Result<Self> {
        if sorted_support.is_empty() {
            return Err(Error::DegenerateG);
        }
        if sorted_support.iter().all(|&s| s == 0.0) {
            return Err(Error::DegenerateG);
        }
        let n = sorted_support.len();
        let (values, weights) = if max_support == 0 || n <= max_support {
            (
                sorted_support.iter().map(|&s| s / tau2).collect(),
                vec![1.0 / n as f64; n],
            )
        } else {
            let chunk = n.div_ceil(max_support);
            let mut values = Vec::with_capacity(max_support);
            let mut weights = Vec::with_capacity(max_support);
            for group in sorted_support.chunks(chunk) {
                values.push(group.iter().sum::<f64>() / group.len() as f64 / tau2);
                weights.push(group.len() as f64 / n as f64);
            }
            (values, weights)
        };
        let mut g = GEval {
            values,
            weights,
            cache: GEvalCache::default(),
        };
        g.rebuild_cache();
        Ok(g)
    }

    /// Recompute the derived square roots; needed after deserialization.
    pub fn rebuild_cache(&mut self) {
        self.cache.sqrt_1p = self.values.iter().map(|&s| (1.0 + s).sqrt()).collect();
        self.cache.sqrt_s = self.values.iter().map(|&s| s.sqrt()).collect();
    }

    fn cache_ready(&self) -> bool {
        self.cache.sqrt_s.len() == self.values.len()
    }

    /// F(u) = sum_j w_j Phi(theta_std a_j - u b_j); strictly decreasing in u
    /// whenever some s'_j > 0.
    #[must_use]
    pub fn constraint(&self, theta_std: f64, u: f64) -> f64 {
        debug_assert!(self.cache_ready(), "GEval cache not rebuilt");
        let mut acc = 0.0;
        for j in 0..self.values.len() {
            let arg = theta_std * self.cache.sqrt_1p[j] - u * self.cache.sqrt_s[j];
            acc += self.weights[j] * norm_cdf(arg);
        }
        acc
    }

    /// (F(u), F'(u)).
    fn constraint_with_grad(&self, theta_std: f64, u: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut fp = 0.0;
        for j in 0..self.values.len() {
            let b = self.cache.sqrt_s[j];
            let arg = theta_std * self.cache.sqrt_1p[j] - u * b;
            let (c, d) = norm_cdf_pdf(arg);
            f += self.weights[j] * c;
            fp -= self.weights[j] * b * d;
        }
        (f, fp)
    }
}

/// Solve F(z) = 1 - beta for the standardized z_beta given a prepared
/// support and theta_std = PhiInv(1-beta).
///
/// F is strictly decreasing, so a sign-holding bracket always exists; the
/// iteration is a Newton step safeguarded by that bracket (any step leaving
/// it becomes a bisection step), which both preserves the bisection
/// guarantee and converges in a handful of F evaluations. The initial
/// bracket is [-50, max(theta_std, 0)]: F(theta_std) < 1-beta holds for
/// theta_std > 0, and the root is <= 0 once theta_std <= 0; the endpoints
/// are expanded geometrically in the (never observed) case they fail to
/// hold numerically.
pub fn solve_z_with(geval: &GEval, theta_std: f64, beta: f64, warm_start: Option<f64>) -> Result<f64> {
    let target = 1.0 - beta;
    let mut lo = -50.0_f64;
    let mut hi = theta_std.max(0.0);
    let mut f_lo = geval.constraint(theta_std, lo) - target;
    let mut expand = 0;
    while f_lo < 0.0 {
        lo *= 2.0;
        f_lo = geval.constraint(theta_std, lo) - target;
        expand += 1;
        if expand > 20 {
            return Err(Error::Domain(format!(
                "z bracket lower endpoint not found for beta = {beta}"
            )));
        }
    }
    let mut f_hi = geval.constraint(theta_std, hi) - target;
    expand = 0;
    while f_hi > 0.0 {
        hi = hi * 2.0 + 1.0;
        f_hi = geval.constraint(theta_std, hi) - target;
        expand += 1;
        if expand > 20 {
            return Err(Error::Domain(format!(
                "z bracket upper endpoint not found for beta = {beta}"
            )));
        }
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let mut u = match warm_start {
        Some(w) if w > lo && w < hi => w,
        _ => 0.5 * (lo + hi),
    };
    for _ in 0..Z_MAX_ITER {
        let (f, fp) = geval.constraint_with_grad(theta_std, u);
        let resid = f - target;
        if resid.abs() <= Z_RESIDUAL_TOL {
            return Ok(u);
        }
        if resid > 0.0 {
            lo = u; // F too big: root is to the right (F decreasing)
        } else {
            hi = u;
        }
        let newton = if fp < 0.0 { u - resid / fp } else { f64::NAN };
        u = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * u.abs().max(1.0) {
            return Ok(u);
        }
    }
    Ok(u)
}

/// z_beta for a model: standardized root of the marginal constraint.
/// Errors with DegenerateG when no support entry is strictly positive.
pub fn solve_z_beta(beta: f64, model: &EBModel) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    let geval = GEval::new(&model.g_support, model.tau2, DEFAULT_MAX_EVAL_SUPPORT)?;
    let theta_std = norm_ppf(1.0 - beta);
    solve_z_with(&geval, theta_std, beta, None)
}

/// Threshold family in original units given precomputed theta_beta
/// (original units) and standardized z_beta:
/// t = theta (1 + s/tau^2) - mu s/tau^2 - z sqrt(s) sqrt(s + tau^2)/tau.
/// At s = 0 this is exactly theta.
#[inline]
#[must_use]
pub fn threshold_value(theta_beta: f64, z_beta: f64, mu: f64, tau2: f64, sigma2: f64) -> f64 {
    let ratio = sigma2 / tau2;
    theta_beta * (1.0 + ratio) - mu * ratio - z_beta * (sigma2.sqrt() * (sigma2 + tau2).sqrt()) / tau2.sqrt()
}

/// t_beta(sigma2) from a model, solving for z_beta on demand.
pub fn threshold(beta: f64, sigma2: f64, model: &EBModel) -> Result<f64> {
    if sigma2 < 0.0 {
        return Err(Error::Domain(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    let theta = theta_quantile(beta, model)?;
    if sigma2 == 0.0 {
        return Ok(theta);
    }
    let z = solve_z_beta(beta, model)?;
    Ok(threshold_value(theta, z, model.mu, model.tau2, sigma2))
}

/// Variance landmarks of the threshold family at one standardized
/// (theta_std, z) pair, per the monotone-tail case split:
///
/// * `None` when theta_std <= 0: the case split is only established for a
///   strictly positive quantile (beta < 1/2) and says nothing otherwise;
/// * `(0, 0)` when z <= 0 < theta_std: t is increasing on all of [0, inf);
/// * otherwise s_star = (theta/sqrt(theta^2-z^2) - 1)/2 locates the interior
///   minimum and s_conj = z^2/(theta^2-z^2) is where t climbs back to its
///   s = 0 value theta.
#[must_use]
pub fn conjugate_variance(theta_std: f64, z: f64) -> Option<(f64, f64)> {
    if theta_std <= 0.0 {
        return None;
    }
    if z <= 0.0 {
        return Some((0.0, 0.0));
    }
    debug_assert!(z < theta_std, "need z < theta for the interior-minimum case");
    let disc = theta_std * theta_std - z * z;
    let s_star = 0.5 * (theta_std / disc.sqrt() - 1.0);
    let s_conj = z * z / disc;
    Some((s_star, s_conj))
}

/// Per-beta grid of (theta_beta, z_beta) enabling fast r-value inversion.
///
/// Grid is beta_j = j/(G+1), j = 1..G. theta is stored in original units,
/// z standardized (the threshold formula consumes exactly that pair). The
/// compressed evaluation support is retained so residuals can be re-checked
/// and serialized predictors reproduce bit-identical arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub grid: Vec<f64>,
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub mu: f64,
    pub tau2: f64,
    pub g_eval: GEval,
}

impl ThresholdTable {
    #[must_use]
    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// Lowest representable r-value = beta_1 = 1/(G+1), also the clip floor.
    #[must_use]
    pub fn r_floor(&self) -> f64 {
        self.grid[0]
    }

    #[must_use]
    pub fn theta_std(&self, j: usize) -> f64 {
        (self.theta[j] - self.mu) / self.tau2.sqrt()
    }

    /// t_{beta_j}(sigma2) in original units.
    #[must_use]
    pub fn threshold_at(&self, j: usize, sigma2: f64) -> f64 {
        threshold_value(self.theta[j], self.z[j], self.mu, self.tau2, sigma2)
    }

    /// Variance landmarks at grid point j (standardized); see
    /// [`conjugate_variance`].
    #[must_use]
    pub fn conjugate_at(&self, j: usize) -> Option<(f64, f64)> {
        conjugate_variance(self.theta_std(j), self.z[j])
    }

    /// Check every table invariant; used after construction and after
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        let g = self.grid.len();
        if g < 2 || self.theta.len() != g || self.z.len() != g {
            return Err(Error::ShapeMismatch(format!(
                "threshold table arrays inconsistent: grid {g}, theta {}, z {}",
                self.theta.len(),
                self.z.len()
            )));
        }
        for j in 0..g {
            if j > 0 {
                if self.grid[j] <= self.grid[j - 1] {
                    return Err(Error::Domain("beta grid not increasing".into()));
                }
                if self.theta[j] >= self.theta[j - 1] {
                    return Err(Error::Domain(format!(
                        "theta not strictly decreasing at grid point {j}"
                    )));
                }
            }
            let theta_std = self.theta_std(j);
            let z = self.z[j];
            // z < theta holds on the half-grid where the proposition
            // applies (theta_std > 0); past beta = 1/2 the provable
            // relation flips to theta_std <= z <= 0.
            let ok = if theta_std > 1e-12 {
                z < theta_std
            } else if theta_std < -1e-12 {
                z >= theta_std - 1e-9 && z <= 1e-9
            } else {
                z.abs() <= 1e-9
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "z/theta relation violated at grid point {j}: theta_std = {theta_std}, z = {z}"
                )));
            }
            let resid = self.g_eval.constraint(theta_std, z) - (1.0 - self.grid[j]);
            if resid.abs() > 1e-8 {
                return Err(Error::Domain(format!(
                    "constraint residual {resid:e} exceeds 1e-8 at grid point {j}"
                )));
            }
        }
        // The r-value inverts beta -> t_beta(s) by binary search, which
        // needs the family nested (t decreasing in beta at every s). That
        // holds whenever dz/dtheta <= 1, true for every support probed to
        // date; re-check here over the evaluation support and a 4x
        // extrapolation beyond it so a violation fails loudly instead of
        // corrupting r-values.
        let probes = {
            let v = &self.g_eval.values;
            [v[0], v[v.len() / 2], v[v.len() - 1], 4.0 * v[v.len() - 1]]
        };
        for s_std in probes {
            if s_std <= 0.0 {
                continue;
            }
            let sigma2 = s_std * self.tau2;
            let mut prev = f64::INFINITY;
            for j in 0..g {
                let t = self.threshold_at(j, sigma2);
                if t > prev + 1e-9 * prev.abs().max(1.0) {
                    return Err(Error::Domain(format!(
                        "threshold family not nested at grid point {j}, sigma2 = {sigma2}"
                    )));
                }
                prev = t;
            }
        }
        Ok(())
    }
}

/// Build the full table on the uniform grid beta_j = j/(G+1) with the
/// default evaluation-support cap.
pub fn build_threshold_table(model: &EBModel, grid_size: usize) -> Result<ThresholdTable> {
    build_threshold_table_with(model, grid_size, DEFAULT_MAX_EVAL_SUPPORT)
}

/// Table construction with an explicit evaluation-support cap (0 = exact).
pub fn build_threshold_table_with(
    model: &EBModel,
    grid_size: usize,
    max_eval_support: usize,
) -> Result<ThresholdTable> {
    if grid_size < 2 {
        return Err(Error::Domain(format!(
            "grid size must be >= 2, got {grid_size}"
        )));
    }
    let geval = GEval::new(&model.g_support, model.tau2, max_eval_support)?;
    let tau = model.tau();
    let denom = (grid_size + 1) as f64;
    let mut grid = Vec::with_capacity(grid_size);
    let mut theta = Vec::with_capacity(grid_size);
    let mut z: Vec<f64> = Vec::with_capacity(grid_size);
    for j in 1..=grid_size {
        let beta = j as f64 / denom;
        // The table stores theta in raw units and every consumer, the
        // validator included, standardizes it back as (theta - mu) / tau.
        // When |mu| dwarfs tau that round trip loses low bits, so solve z
        // against the round-tripped value: the stored pair then satisfies
        // the constraint exactly as consumers will recompute it.
        let theta_raw = model.mu + tau * norm_ppf(1.0 - beta);
        let theta_std = (theta_raw - model.mu) / tau;
        // Successive roots move smoothly with beta: seed each solve with a
        // linear extrapolation of the previous two to keep Newton at 1-2
        // steps per grid point.
        let warm = match z.len() {
            0 => None,
            1 => Some(z[0]),
            n => Some(2.0 * z[n - 1] - z[n - 2]),
        };
        let root = solve_z_with(&geval, theta_std, beta, warm)?;
        grid.push(beta);
        theta.push(theta_raw);
        z.push(root);
    }
    let table = ThresholdTable {
        grid,
        theta,
        z,
        mu: model.mu,
        tau2: model.tau2,
        g_eval: geval,
    };
    table.validate()?;
    Ok(table)
}
