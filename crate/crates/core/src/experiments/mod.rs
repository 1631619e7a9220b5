//! Convergence-rate experiments.
//!
//! For every sample size n on a grid, [`run_cell`] repeats "draw n samples,
//! estimate, subtract the truth" in batches until the confidence interval of
//! the mean error is short relative to the error itself:
//!
//! ```text
//! (CI length) / |bias| < uncertainty_target
//! ```
//!
//! or until `max_trials` is reached. [`run_experiment`] then fits the decay
//! exponents of |bias| and variance on a log10-log10 scale and attaches the
//! exponents predicted by [`theoretical_rates`].
//!
//! Trial t at sample size n always uses the random stream keyed by
//! `(seed, n, t)` and results are reduced in trial order, so reports do not
//! depend on how many threads ran the trials.

pub mod fit;
pub mod rates;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distributions::{DistributionSpec, Draw};
use crate::error::{Error, Result};
use crate::estimators::{kl_entropy, ksg_mi, truncated_kl_entropy, EstimatorConfig, EstimatorKind, Truncation};
use crate::metrics::{JointMetric, Metric};
use crate::sum::{mean, pairwise_sum};

pub use fit::{fit_rates, ols, FitPoint, FittedRates, LineFit, BIAS_NOISE_FLOOR};
pub use rates::{theoretical_rates, RateEstimator, RateModel, Tail, TheoreticalRates};

/// Sample sizes, either listed or log-spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NGrid {
    List(Vec<usize>),
    /// `round(10^(from + i/per_decade))` for i = 0, 1, … while the exponent
    /// stays <= `to` (with a small tolerance for rounding).
    Log {
        from: f64,
        to: f64,
        per_decade: usize,
    },
}

impl NGrid {
    pub fn sizes(&self) -> Result<Vec<usize>> {
        match self {
            NGrid::List(v) => Ok(v.clone()),
            &NGrid::Log { from, to, per_decade } => {
                if per_decade == 0 || !from.is_finite() || !to.is_finite() || to < from || from < 0.0 {
                    return Err(config_err("n_grid", "log grid needs 0 <= from <= to and per_decade >= 1"));
                }
                let steps = ((to - from) * per_decade as f64 + 1e-9).floor() as usize;
                Ok((0..=steps)
                    .map(|i| 10f64.powf(from + i as f64 / per_decade as f64).round() as usize)
                    .collect())
            }
        }
    }
}

fn default_name() -> String {
    "experiment".to_string()
}
fn default_target() -> f64 {
    0.05
}
fn default_ci_level() -> f64 {
    0.99
}
fn default_min_trials() -> u64 {
    100
}
fn default_max_trials() -> u64 {
    1_000_000
}
fn default_batch() -> u64 {
    100
}
fn default_joint_metric() -> Metric {
    Metric::Chebyshev
}

/// One experiment, as read from a TOML config file.
///
/// ```toml
/// name = "table2_row1"
/// estimator = "ksg"            # kl | truncated_kl | ksg
/// k = 3
/// seed = 20240601
/// n_grid = { from = 2.0, to = 4.5, per_decade = 2 }   # or n_grid = [100, 1000]
/// bias_fit_min_n = 100         # optional
///
/// [distribution]
/// family = "joint_gaussian_equicorr"
/// d_x = 1
/// d_y = 1
/// rho = 0.6
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub estimator: EstimatorKind,
    pub k: usize,
    pub n_grid: NGrid,
    pub seed: u64,
    #[serde(default = "default_target")]
    pub uncertainty_target: f64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default = "default_min_trials")]
    pub min_trials: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    /// Trials between two stopping checks.
    #[serde(default = "default_batch")]
    pub batch_size: u64,
    #[serde(default)]
    pub bias_fit_min_n: Option<usize>,
    /// Norm for the entropy estimators.
    #[serde(default)]
    pub metric: Metric,
    /// Marginal norms of the KSG joint metric.
    #[serde(default = "default_joint_metric")]
    pub x_metric: Metric,
    #[serde(default = "default_joint_metric")]
    pub y_metric: Metric,
    /// Truncation for `truncated_kl`; defaults to A = 1, β = 1/(d+2).
    #[serde(default)]
    pub truncation: Option<Truncation>,
    /// Tail regime used for the theoretical rates; inferred from the
    /// distribution when absent.
    #[serde(default)]
    pub tail: Option<Tail>,
    pub distribution: DistributionSpec,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentSpec {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".to_string());
            config_err(&field, e.to_string().trim().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution
            .validate()
            .map_err(|e| config_err("distribution", e.to_string()))?;
        if self.k == 0 {
            return Err(config_err("k", "must be at least 1"));
        }
        let grid = self.n_grid.sizes()?;
        if grid.is_empty() {
            return Err(config_err("n_grid", "must not be empty"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("n_grid", format!("must be strictly increasing, got {grid:?}")));
        }
        if grid[0] <= self.k {
            return Err(config_err("n_grid", format!("every n must exceed k = {}, got {}", self.k, grid[0])));
        }
        if !(self.uncertainty_target > 0.0 && self.uncertainty_target < 1.0) {
            return Err(config_err("uncertainty_target", "must lie in (0, 1)"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(config_err("ci_level", "must lie in (0, 1)"));
        }
        if self.min_trials < 2 {
            return Err(config_err("min_trials", "must be at least 2"));
        }
        if self.max_trials < self.min_trials {
            return Err(config_err("max_trials", "must be at least min_trials"));
        }
        if self.batch_size == 0 {
            return Err(config_err("batch_size", "must be at least 1"));
        }
        match self.estimator {
            EstimatorKind::Ksg => {
                if !self.distribution.is_joint() {
                    return Err(config_err("estimator", "ksg needs a joint distribution"));
                }
                if self.truncation.is_some() {
                    return Err(config_err("truncation", "only applies to truncated_kl"));
                }
            }
            EstimatorKind::Kl | EstimatorKind::TruncatedKl => {
                if self.distribution.is_joint() {
                    return Err(config_err("estimator", "entropy estimators need a single-block distribution"));
                }
                if self.estimator == EstimatorKind::Kl && self.truncation.is_some() {
                    return Err(config_err("truncation", "only applies to truncated_kl"));
                }
                if self.estimator == EstimatorKind::TruncatedKl {
                    self.truncation
                        .unwrap_or_default()
                        .beta_for(self.distribution.dim())
                        .map_err(|e| config_err("truncation", e.to_string()))?;
                }
            }
        }
        self.rate_model()
            .and_then(|m| theoretical_rates(&m))
            .map_err(|e| config_err("tail", e.to_string()))?;
        Ok(())
    }

    /// The quantity being estimated: entropy or mutual information.
    pub fn truth(&self) -> Result<f64> {
        match self.estimator {
            EstimatorKind::Ksg => self.distribution.true_mi(),
            _ => self.distribution.true_entropy(),
        }
    }

    pub fn rate_model(&self) -> Result<RateModel> {
        let tail = self.tail.unwrap_or(match self.distribution {
            // E|X|^α < ∞ for every α < 1
            DistributionSpec::Cauchy => Tail::Moment { alpha: 1.0 },
            _ => Tail::Exponential,
        });
        let model = match (self.estimator, self.distribution) {
            (EstimatorKind::Ksg, DistributionSpec::JointGaussianEquicorr { d_x, d_y, .. }) => RateModel::ksg(d_x, d_y),
            (EstimatorKind::Ksg, _) => return Err(config_err("estimator", "ksg needs a joint distribution")),
            _ => RateModel::entropy(self.distribution.dim()),
        };
        Ok(model.with_tail(tail))
    }

    /// One estimate from the samples of trial `trial` at size `n`.
    pub fn estimate_trial(&self, n: usize, trial: u64) -> Result<f64> {
        let draw = self.distribution.sample(n, self.seed, trial)?;
        match (self.estimator, draw) {
            (EstimatorKind::Kl, Draw::Single(s)) => {
                Ok(kl_entropy(&s, &EstimatorConfig::new(self.k).with_metric(self.metric))?.value)
            }
            (EstimatorKind::TruncatedKl, Draw::Single(s)) => {
                let cfg = EstimatorConfig::truncated(self.k, self.truncation.unwrap_or_default()).with_metric(self.metric);
                Ok(truncated_kl_entropy(&s, &cfg)?.value)
            }
            (EstimatorKind::Ksg, Draw::Joint(x, y)) => {
                let m = JointMetric::new(self.x_metric, self.y_metric, x.dim(), y.dim())?;
                Ok(ksg_mi(&x, &y, self.k, &m)?.value)
            }
            _ => Err(config_err("estimator", "estimator does not match the distribution")),
        }
    }
}

/// Why a cell stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// Relative uncertainty fell below the target.
    Converged,
    /// `max_trials` reached first.
    MaxTrials,
    /// All errors were identical, so the relative uncertainty of a zero (or
    /// constant) bias cannot be resolved by more trials.
    Unresolved,
}

/// Statistics of one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub trials: u64,
    /// Mean of (estimate − truth).
    pub bias: f64,
    /// Half-width of the `ci_level` normal-approximation interval of `bias`.
    pub bias_ci: f64,
    /// Sample variance of the estimates.
    pub variance: f64,
    /// Half-width of the `ci_level` interval of `variance` (asymptotic
    /// standard error of the sample variance, using the fourth moment).
    pub variance_ci: f64,
    /// CI length / |bias|; infinite when the bias is exactly zero.
    pub relative_uncertainty: f64,
    pub status: CellStatus,
}

impl CellResult {
    pub fn converged(&self) -> bool {
        self.status == CellStatus::Converged
    }
}

/// Stopping parameters of [`run_cell_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub uncertainty_target: f64,
    pub ci_level: f64,
    pub min_trials: u64,
    pub max_trials: u64,
    pub batch_size: u64,
}

impl From<&ExperimentSpec> for StoppingRule {
    fn from(s: &ExperimentSpec) -> Self {
        StoppingRule {
            uncertainty_target: s.uncertainty_target,
            ci_level: s.ci_level,
            min_trials: s.min_trials,
            max_trials: s.max_trials,
            batch_size: s.batch_size,
        }
    }
}

/// Two-sided standard normal quantile for confidence level `level`.
pub fn normal_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * level)
}

/// Summary statistics of a set of errors, computed in index order.
fn summarize(errors: &[f64], z: f64) -> (f64, f64, f64, f64) {
    let t = errors.len() as f64;
    let bias = mean(errors);
    let dev2: Vec<f64> = errors.iter().map(|e| (e - bias) * (e - bias)).collect();
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let variance = pairwise_sum(&dev2) / (t - 1.0);
    let m4 = pairwise_sum(&dev4) / t;
    let bias_ci = z * (variance / t).sqrt();
    // Var(s²) ≈ (m4 − s⁴ (T−3)/(T−1)) / T
    let var_of_var = ((m4 - variance * variance * (t - 3.0) / (t - 1.0)) / t).max(0.0);
    let variance_ci = z * var_of_var.sqrt();
    (bias, bias_ci, variance, variance_ci)
}

/// Runs the adaptive-trial loop with an arbitrary per-trial estimator.
///
/// `estimate(t)` must return the estimate of trial `t` (1-based); it is
/// called from several threads. Estimator errors abort the cell and carry
/// `seed`, `n` and the trial index for reproduction.
pub fn run_cell_with<F>(n: usize, truth: f64, seed: u64, rule: StoppingRule, estimate: F) -> Result<CellResult>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let z = normal_quantile(rule.ci_level);
    let mut errors: Vec<f64> = Vec::new();
    loop {
        let done = errors.len() as u64;
        let batch = rule.batch_size.min(rule.max_trials - done);
        let results: Vec<Result<f64>> = (done + 1..=done + batch).into_par_iter().map(&estimate).collect();
        for (offset, r) in results.into_iter().enumerate() {
            let trial = done + 1 + offset as u64;
            let value = r.map_err(|e| Error::Trial {
                seed,
                n,
                trial,
                source: Box::new(e),
            })?;
            errors.push(value - truth);
        }
        let trials = errors.len() as u64;
        if trials < rule.min_trials {
            continue;
        }
        let (bias, bias_ci, variance, variance_ci) = summarize(&errors, z);
        let relative_uncertainty = if bias == 0.0 { f64::INFINITY } else { 2.0 * bias_ci / bias.abs() };
        let status = if variance == 0.0 {
            Some(CellStatus::Unresolved)
        } else if relative_uncertainty < rule.uncertainty_target {
            Some(CellStatus::Converged)
        } else if trials >= rule.max_trials {
            Some(CellStatus::MaxTrials)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(CellResult {
                n,
                trials,
                bias,
                bias_ci,
                variance,
                variance_ci,
                relative_uncertainty,
                status,
            });
        }
    }
}

/// Adaptive-trial bias and variance at sample size `n`.
pub fn run_cell(spec: &ExperimentSpec, n: usize) -> Result<CellResult> {
    let truth = spec.truth()?;
    run_cell_with(n, truth, spec.seed, StoppingRule::from(spec), |t| spec.estimate_trial(n, t))
}

/// Fitted exponents, or why they could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(FittedRates),
    Failed { reason: String },
}

impl FitOutcome {
    pub fn rates(&self) -> Option<&FittedRates> {
        match self {
            FitOutcome::Fitted(r) => Some(r),
            FitOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: ExperimentSpec,
    pub truth: f64,
    pub rows: Vec<CellResult>,
    pub fitted: FitOutcome,
    pub theoretical: TheoreticalRates,
}

impl ConvergenceReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(CellResult::converged)
    }
}

/// Runs every cell of the grid, fits the rates and attaches the theory.
///
/// Trials run on the current rayon pool; wrap the call in
/// `ThreadPool::install` to control the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    run_experiment_with_progress(spec, |_| {})
}

/// [`run_experiment`] with a callback invoked after each finished cell.
pub fn run_experiment_with_progress(spec: &ExperimentSpec, mut progress: impl FnMut(&CellResult)) -> Result<ConvergenceReport> {
    spec.validate()?;
    let truth = spec.truth()?;
    let mut rows = Vec::new();
    for n in spec.n_grid.sizes()? {
        let row = run_cell(spec, n)?;
        progress(&row);
        rows.push(row);
    }
    let points: Vec<FitPoint> = rows
        .iter()
        .map(|r| FitPoint {
            n: r.n,
            bias: r.bias,
            variance: r.variance,
        })
        .collect();
    let fitted = match fit_rates(&points, spec.bias_fit_min_n) {
        Ok(f) => FitOutcome::Fitted(f),
        Err(e) => FitOutcome::Failed { reason: e.to_string() },
    };
    let theoretical = theoretical_rates(&spec.rate_model()?)?;
    Ok(ConvergenceReport {
        spec: spec.clone(),
        truth,
        rows,
        fitted,
        theoretical,
    })
}

/// Runs `f` on a dedicated pool of `threads` workers; 0 means one per core.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}
