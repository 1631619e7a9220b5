//! kNN estimators of differential entropy and mutual information, in nats.
//!
//! * [`kl_entropy`]: the Kozachenko-Leonenko estimator
//!   `ĥ = -ψ(k) + ψ(N) + ln c_d + (d/N) Σ ln ε(i)`, where ε(i) is the distance
//!   from sample i to its k-th nearest neighbor.
//! * [`truncated_kl_entropy`]: the same with ε(i) replaced by
//!   `ρ(i) = min{ε(i), a_N}`, `a_N = A·N^{-β}`. Capping the distances bounds the
//!   influence of isolated samples in the tails.
//! * [`ksg_mi`]: the first Kraskov-Stögbauer-Grassberger estimator
//!   `Î = ψ(N) + ψ(k) - ⟨ψ(n_x + 1)⟩ - ⟨ψ(n_y + 1)⟩` with ε(i) taken in the
//!   max-composed joint metric and n_x, n_y the marginal counts strictly inside ε(i).
//!
//! Per-sample work runs in parallel for large N; the final sums add the
//! per-sample terms in ascending order with pairwise summation, so results
//! depend neither on the thread count nor on the order of the samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{build_index, NeighborIndex};
use crate::metrics::{JointMetric, Metric};
use crate::sample::SampleSet;
use crate::special::psi;
use crate::sum::{mean, pairwise_sum, sorted_mean};

const PARALLEL_MIN_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Untruncated Kozachenko-Leonenko entropy.
    Kl,
    /// Kozachenko-Leonenko entropy with truncated neighbor distances.
    TruncatedKl,
    /// KSG mutual information.
    Ksg,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Kl => "kl",
            EstimatorKind::TruncatedKl => "truncated_kl",
            EstimatorKind::Ksg => "ksg",
        })
    }
}

/// Truncation radius `a_N = A·N^{-β}`. A missing β resolves to `1/(d+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_a() -> f64 {
    1.0
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { a: 1.0, beta: None }
    }
}

impl Truncation {
    pub fn new(a: f64, beta: f64) -> Self {
        Truncation { a, beta: Some(beta) }
    }

    /// β for dimension `d`, after validation.
    pub fn beta_for(&self, d: usize) -> Result<f64> {
        let beta = self.beta.unwrap_or(1.0 / (d as f64 + 2.0));
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::invalid("A", format!("must be a finite positive number, got {}", self.a)));
        }
        if !(beta > 0.0 && beta < 1.0 / d as f64) {
            return Err(Error::invalid(
                "beta",
                format!("must lie in (0, 1/d) = (0, {}) for d = {d}, got {beta}", 1.0 / d as f64),
            ));
        }
        Ok(beta)
    }

    /// `a_N` for `n` samples in `d` dimensions.
    pub fn radius(&self, n: usize, d: usize) -> Result<f64> {
        let beta = self.beta_for(d)?;
        Ok(self.a * (n as f64).powf(-beta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub k: usize,
    pub truncation: Option<Truncation>,
    pub metric: Metric,
}

impl EstimatorConfig {
    /// Untruncated, Euclidean.
    pub fn new(k: usize) -> Self {
        EstimatorConfig {
            k,
            truncation: None,
            metric: Metric::Euclidean,
        }
    }

    pub fn truncated(k: usize, truncation: Truncation) -> Self {
        EstimatorConfig {
            truncation: Some(truncation),
            ..Self::new(k)
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }
}

/// Per-sample intermediates of the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStats {
    /// Distance to the k-th neighbor (joint metric for KSG).
    pub epsilon: Vec<f64>,
    /// `min(ε(i), a_N)`; equal to `epsilon` without truncation.
    pub rho: Vec<f64>,
    /// Strict marginal counts within ε(i); empty for entropy.
    pub n_x: Vec<usize>,
    pub n_y: Vec<usize>,
    /// `a_N` when truncation is active.
    pub radius: Option<f64>,
    /// Samples whose k-th and (k+1)-th neighbor distances coincide.
    pub ties: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub truncated: usize,
    pub mean_epsilon: f64,
    pub mean_rho: f64,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// Estimate in nats.
    pub value: f64,
    pub kind: EstimatorKind,
    pub k: usize,
    pub n: usize,
    pub truncation_radius: Option<f64>,
    pub diagnostics: Diagnostics,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

fn per_sample<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n >= PARALLEL_MIN_N {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// (ε(i), tie flag) for every sample. The tie flag is set when the (k+1)-th
/// neighbor sits at exactly ε(i).
fn kth_distances(index: &NeighborIndex, k: usize) -> Result<(Vec<f64>, usize)> {
    let n = index.len();
    let probe = (k + 1).min(n - 1);
    let rows = per_sample(n, |i| -> Result<(f64, bool)> {
        let r = index.knn_of_sample(i, probe)?;
        let tie = probe > k && r.distances[k] == r.distances[k - 1];
        Ok((r.distances[k - 1], tie))
    });
    let mut eps = Vec::with_capacity(n);
    let mut ties = 0;
    for row in rows {
        let (e, t) = row?;
        eps.push(e);
        ties += t as usize;
    }
    let zeros: Vec<usize> = (0..n).filter(|&i| eps[i] == 0.0).collect();
    if !zeros.is_empty() {
        return Err(Error::DuplicatePoints { indices: zeros });
    }
    Ok((eps, ties))
}

/// ε and ρ for the entropy estimators.
pub fn entropy_neighbor_stats(samples: &SampleSet, cfg: &EstimatorConfig) -> Result<NeighborStats> {
    let n = samples.len();
    check_k(cfg.k, n)?;
    let radius = cfg.truncation.map(|t| t.radius(n, samples.dim())).transpose()?;
    let index = build_index(samples, cfg.metric)?;
    let (epsilon, ties) = kth_distances(&index, cfg.k)?;
    let rho = match radius {
        Some(a_n) => epsilon.iter().map(|&e| e.min(a_n)).collect(),
        None => epsilon.clone(),
    };
    Ok(NeighborStats {
        epsilon,
        rho,
        n_x: Vec::new(),
        n_y: Vec::new(),
        radius,
        ties,
    })
}

fn entropy_from_stats(stats: &NeighborStats, k: usize, d: usize, metric: Metric) -> Result<f64> {
    let n = stats.rho.len();
    let logs: Vec<f64> = stats.rho.iter().map(|r| r.ln()).collect();
    let value = -psi(k as f64) + psi(n as f64) + metric.ln_unit_ball_volume(d)? + d as f64 * sorted_mean(logs);
    Ok(value)
}

fn entropy_result(
    samples: &SampleSet,
    cfg: &EstimatorConfig,
    kind: EstimatorKind,
) -> Result<EstimateResult> {
    let stats = entropy_neighbor_stats(samples, cfg)?;
    let value = entropy_from_stats(&stats, cfg.k, samples.dim(), cfg.metric)?;
    finite(value)?;
    let truncated = match stats.radius {
        Some(a_n) => stats.epsilon.iter().filter(|&&e| e > a_n).count(),
        None => 0,
    };
    Ok(EstimateResult {
        value,
        kind,
        k: cfg.k,
        n: samples.len(),
        truncation_radius: stats.radius,
        diagnostics: Diagnostics {
            truncated,
            mean_epsilon: mean(&stats.epsilon),
            mean_rho: mean(&stats.rho),
            ties: stats.ties,
        },
    })
}

fn finite(value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::invalid("samples", format!("estimate is not finite ({value})")));
    }
    Ok(())
}

/// Kozachenko-Leonenko entropy estimate. `cfg.truncation` must be `None`.
pub fn kl_entropy(samples: &SampleSet, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    if cfg.truncation.is_some() {
        return Err(Error::invalid("truncation", "kl_entropy is the untruncated estimator; use truncated_kl_entropy"));
    }
    entropy_result(samples, cfg, EstimatorKind::Kl)
}

/// Truncated Kozachenko-Leonenko entropy estimate. A config without
/// truncation uses the defaults A = 1, β = 1/(d+2).
pub fn truncated_kl_entropy(samples: &SampleSet, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    let cfg = EstimatorConfig {
        truncation: Some(cfg.truncation.unwrap_or_default()),
        ..*cfg
    };
    entropy_result(samples, &cfg, EstimatorKind::TruncatedKl)
}

/// Joint ε(i) and strict marginal counts for KSG.
pub fn ksg_neighbor_stats(x: &SampleSet, y: &SampleSet, k: usize, metric: &JointMetric) -> Result<NeighborStats> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch { x: n, y: y.len() });
    }
    check_k(k, n)?;
    if x.dim() != metric.d_x || y.dim() != metric.d_y {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            got: x.dim() + y.dim(),
        });
    }
    let joint = x.hstack(y)?;
    let joint_index = build_index(&joint, *metric)?;
    let (epsilon, ties) = kth_distances(&joint_index, k)?;
    let x_index = build_index(x, metric.x_metric)?;
    let y_index = build_index(y, metric.y_metric)?;
    let counts = per_sample(n, |i| -> Result<(usize, usize)> {
        Ok((x_index.count_within(i, epsilon[i])?, y_index.count_within(i, epsilon[i])?))
    });
    let mut n_x = Vec::with_capacity(n);
    let mut n_y = Vec::with_capacity(n);
    for c in counts {
        let (a, b) = c?;
        n_x.push(a);
        n_y.push(b);
    }
    Ok(NeighborStats {
        rho: epsilon.clone(),
        epsilon,
        n_x,
        n_y,
        radius: None,
        ties,
    })
}

/// KSG mutual information estimate (first variant, no truncation).
pub fn ksg_mi(x: &SampleSet, y: &SampleSet, k: usize, metric: &JointMetric) -> Result<EstimateResult> {
    let stats = ksg_neighbor_stats(x, y, k, metric)?;
    let n = x.len();
    let psi_x: Vec<f64> = stats.n_x.iter().map(|&c| psi(c as f64 + 1.0)).collect();
    let psi_y: Vec<f64> = stats.n_y.iter().map(|&c| psi(c as f64 + 1.0)).collect();
    let value = psi(n as f64) + psi(k as f64) - sorted_mean(psi_x) - sorted_mean(psi_y);
    finite(value)?;
    let mean_eps = mean(&stats.epsilon);
    Ok(EstimateResult {
        value,
        kind: EstimatorKind::Ksg,
        k,
        n,
        truncation_radius: None,
        diagnostics: Diagnostics {
            truncated: 0,
            mean_epsilon: mean_eps,
            mean_rho: mean_eps,
            ties: stats.ties,
        },
    })
}

/// Sum of ln ρ(i); exposed for diagnostics.
pub fn sum_log_rho(stats: &NeighborStats) -> f64 {
    let logs: Vec<f64> = stats.rho.iter().map(|r| r.ln()).collect();
    pairwise_sum(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn line(vals: &[f64]) -> SampleSet {
        SampleSet::from_scalars(vals).unwrap()
    }

    #[test]
    fn two_point_kl() {
        let r = kl_entropy(&line(&[0.0, 1.0]), &EstimatorConfig::new(1)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 + LN_2, epsilon = 1e-14);
        assert_eq!(r.kind, EstimatorKind::Kl);
        assert_eq!(r.diagnostics.truncated, 0);
    }

    #[test]
    fn two_point_truncated() {
        let cfg = EstimatorConfig::truncated(1, Truncation::new(1.0, 1.0 / 3.0));
        let r = truncated_kl_entropy(&line(&[0.0, 10.0]), &cfg).unwrap();
        assert_abs_diff_eq!(r.truncation_radius.unwrap(), 2f64.powf(-1.0 / 3.0), epsilon = 1e-15);
        assert_abs_diff_eq!(r.value, 1.0 + 2.0 / 3.0 * LN_2, epsilon = 1e-13);
        assert_eq!(r.diagnostics.truncated, 2);
    }

    #[test]
    fn truncation_inactive_matches_kl() {
        let s = line(&[0.0, 0.1, 0.25, 0.3, 0.5, 0.55, 0.7, 0.9]);
        let plain = kl_entropy(&s, &EstimatorConfig::new(2)).unwrap();
        let trunc = truncated_kl_entropy(&s, &EstimatorConfig::truncated(2, Truncation::new(100.0, 0.2))).unwrap();
        assert_abs_diff_eq!(plain.value, trunc.value, epsilon = 1e-12);
        assert_eq!(trunc.diagnostics.truncated, 0);
    }

    #[test]
    fn default_beta_is_one_over_d_plus_two() {
        let t = Truncation::default();
        assert_abs_diff_eq!(t.beta_for(3).unwrap(), 0.2);
        assert_abs_diff_eq!(t.radius(32, 3).unwrap(), 32f64.powf(-0.2));
        assert!(Truncation::new(1.0, 0.5).beta_for(2).is_err());
        assert!(Truncation::new(0.0, 0.1).beta_for(2).is_err());
        assert!(Truncation::new(1.0, 0.0).beta_for(2).is_err());
    }

    #[test]
    fn kl_rejects_truncated_config() {
        let cfg = EstimatorConfig::truncated(1, Truncation::default());
        assert!(kl_entropy(&line(&[0.0, 1.0, 2.0]), &cfg).is_err());
    }

    #[test]
    fn duplicates_are_reported() {
        let err = kl_entropy(&line(&[0.0, 1.0, 1.0, 4.0]), &EstimatorConfig::new(1)).unwrap_err();
        match err {
            Error::DuplicatePoints { indices } => assert_eq!(indices, vec![1, 2]),
            e => panic!("unexpected {e}"),
        }
        // with k = 2 a duplicated pair still has a nonzero second neighbor
        assert!(kl_entropy(&line(&[0.0, 1.0, 1.0, 4.0]), &EstimatorConfig::new(2)).is_ok());
    }

    #[test]
    fn k_out_of_range() {
        let s = line(&[0.0, 1.0, 3.0]);
        assert!(matches!(kl_entropy(&s, &EstimatorConfig::new(3)), Err(Error::InvalidK { .. })));
        assert!(matches!(kl_entropy(&s, &EstimatorConfig::new(0)), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn collinear_stats() {
        let stats = entropy_neighbor_stats(&line(&[0.0, 1.0, 3.0]), &EstimatorConfig::new(1)).unwrap();
        assert_eq!(stats.epsilon, vec![1.0, 1.0, 2.0]);
        assert_eq!(stats.rho, stats.epsilon);
        assert_eq!(stats.ties, 0);
        let tied = entropy_neighbor_stats(&line(&[-1.0, 0.0, 1.0, 5.0]), &EstimatorConfig::new(1)).unwrap();
        assert_eq!(tied.ties, 1);
    }

    #[test]
    fn truncation_below_all_eps() {
        let cfg = EstimatorConfig::truncated(1, Truncation::new(1e-3, 0.5));
        let stats = entropy_neighbor_stats(&line(&[0.0, 1.0, 3.0]), &cfg).unwrap();
        let a_n = 1e-3 * 3f64.powf(-0.5);
        assert!(stats.rho.iter().all(|&r| r == a_n));
    }

    #[test]
    fn ksg_hand_counts() {
        // Chebyshev joint metric, k = 1.
        // z0 = (0, 0), z1 = (1, 0.5), z2 = (0.2, 3), z3 = (2.5, 0.4)
        // joint distances: d01 = 1, d02 = 3, d03 = 2.5, d12 = 2.5, d13 = 1.5, d23 = 2.6
        // ε = (1, 1, 2.5, 1.5)
        // x = (0, 1, 0.2, 2.5): n_x(0) = |{0.2}| = 1 (|1-0| = 1 not < 1)
        //   n_x(1): |0-1|=1 <1? no; |0.2-1|=0.8 yes; |2.5-1|=1.5 no -> 1
        //   n_x(2): r = 2.5: |0-0.2|, |1-0.2| yes; |2.5-0.2| = 2.3 yes -> 3
        //   n_x(3): r = 1.5: |1-2.5| = 1.5 no; others farther -> 0
        // y = (0, 0.5, 3, 0.4): n_y(0): r=1: 0.5, 0.4 -> 2
        //   n_y(1): r=1: 0, 0.4 -> 2; n_y(2): r=2.5: |0-3|=3 no, 2.5 no (|0.5-3| = 2.5), |0.4-3|=2.6 no -> 0
        //   n_y(3): r=1.5: 0, 0.5 yes; 3 no -> 2
        let x = line(&[0.0, 1.0, 0.2, 2.5]);
        let y = line(&[0.0, 0.5, 3.0, 0.4]);
        let j = JointMetric::chebyshev(1, 1).unwrap();
        let stats = ksg_neighbor_stats(&x, &y, 1, &j).unwrap();
        assert_eq!(stats.epsilon, vec![1.0, 1.0, 2.5, 1.5]);
        assert_eq!(stats.n_x, vec![1, 1, 3, 0]);
        assert_eq!(stats.n_y, vec![2, 2, 0, 2]);
        let r = ksg_mi(&x, &y, 1, &j).unwrap();
        let expected = psi(4.0) + psi(1.0)
            - (psi(2.0) + psi(2.0) + psi(4.0) + psi(1.0)) / 4.0
            - (psi(3.0) + psi(3.0) + psi(1.0) + psi(3.0)) / 4.0;
        assert_abs_diff_eq!(r.value, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(psi(1.0), -EULER_GAMMA, epsilon = 1e-14);
    }

    #[test]
    fn ksg_errors() {
        let j = JointMetric::chebyshev(1, 1).unwrap();
        let x = line(&[0.0, 1.0, 2.0]);
        let y = line(&[0.0, 1.0]);
        assert!(matches!(ksg_mi(&x, &y, 1, &j), Err(Error::LengthMismatch { .. })));
        assert!(matches!(ksg_mi(&x, &x, 3, &j), Err(Error::InvalidK { .. })));
        let dup = line(&[0.0, 1.0, 1.0]);
        assert!(matches!(ksg_mi(&dup, &dup, 1, &j), Err(Error::DuplicatePoints { .. })));
    }
}
