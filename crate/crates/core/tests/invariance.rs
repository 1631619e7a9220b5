//! Symmetries every estimator must respect.

use knnrate::distributions::DistributionSpec;
use knnrate::{kl_entropy, ksg_mi, truncated_kl_entropy, EstimatorConfig, JointMetric, Metric, SampleSet, Truncation};

fn gaussian(n: usize, d: usize, seed: u64) -> SampleSet {
    DistributionSpec::GaussianStd { d }.sample(n, seed, 0).unwrap().single().unwrap()
}

fn joint(n: usize, seed: u64) -> (SampleSet, SampleSet) {
    DistributionSpec::JointGaussianEquicorr { d_x: 1, d_y: 2, rho: 0.6 }
        .sample(n, seed, 0)
        .unwrap()
        .joint()
        .unwrap()
}

/// Reverses the rows; a fixed, non-trivial permutation.
fn reversed(s: &SampleSet) -> SampleSet {
    let perm: Vec<usize> = (0..s.len()).rev().collect();
    s.permute(&perm).unwrap()
}

#[test]
fn entropy_translation_invariance() {
    let s = gaussian(800, 3, 1);
    let shifted = s.map(|c, v| v + [3.25, -7.5, 0.125][c]).unwrap();
    for metric in [Metric::Euclidean, Metric::Chebyshev] {
        let cfg = EstimatorConfig::new(3).with_metric(metric);
        let a = kl_entropy(&s, &cfg).unwrap().value;
        let b = kl_entropy(&shifted, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-12, "{metric:?}: {a} vs {b}");
        let tcfg = EstimatorConfig::truncated(3, Truncation::default()).with_metric(metric);
        let a = truncated_kl_entropy(&s, &tcfg).unwrap().value;
        let b = truncated_kl_entropy(&shifted, &tcfg).unwrap().value;
        assert!((a - b).abs() < 1e-12, "{metric:?} truncated: {a} vs {b}");
    }
}

#[test]
fn untruncated_entropy_scaling_covariance() {
    let s = gaussian(600, 2, 2);
    for a in [0.01, 0.5, 3.0, 1e4] {
        let scaled = s.map(|_, v| a * v).unwrap();
        let cfg = EstimatorConfig::new(4);
        let h = kl_entropy(&s, &cfg).unwrap().value;
        let ha = kl_entropy(&scaled, &cfg).unwrap().value;
        assert!((ha - (h + 2.0 * f64::ln(a))).abs() < 1e-10, "a = {a}");
    }
}

#[test]
fn permutation_invariance_is_exact() {
    let s = gaussian(500, 2, 3);
    let p = reversed(&s);
    let cfg = EstimatorConfig::new(3);
    assert_eq!(kl_entropy(&s, &cfg).unwrap().value, kl_entropy(&p, &cfg).unwrap().value);
    let tcfg = EstimatorConfig::truncated(3, Truncation::default());
    assert_eq!(
        truncated_kl_entropy(&s, &tcfg).unwrap().value,
        truncated_kl_entropy(&p, &tcfg).unwrap().value
    );
    let (x, y) = joint(500, 4);
    let m = JointMetric::chebyshev(1, 2).unwrap();
    assert_eq!(
        ksg_mi(&x, &y, 3, &m).unwrap().value,
        ksg_mi(&reversed(&x), &reversed(&y), 3, &m).unwrap().value
    );
}

#[test]
fn ksg_translation_and_joint_scaling_invariance() {
    let (x, y) = joint(700, 5);
    let m = JointMetric::chebyshev(1, 2).unwrap();
    let base = ksg_mi(&x, &y, 3, &m).unwrap().value;
    let xt = x.map(|_, v| v - 11.0).unwrap();
    let yt = y.map(|c, v| v + [0.3, 5.0][c]).unwrap();
    assert!((ksg_mi(&xt, &yt, 3, &m).unwrap().value - base).abs() < 1e-12);
    for a in [0.25, 7.0, 1e3] {
        let xs = x.map(|_, v| a * v).unwrap();
        let ys = y.map(|_, v| a * v).unwrap();
        assert!((ksg_mi(&xs, &ys, 3, &m).unwrap().value - base).abs() < 1e-10, "a = {a}");
    }
}

#[test]
fn ksg_is_symmetric_in_x_and_y() {
    let (x, y) = joint(400, 6);
    let a = ksg_mi(&x, &y, 2, &JointMetric::chebyshev(1, 2).unwrap()).unwrap().value;
    let b = ksg_mi(&y, &x, 2, &JointMetric::chebyshev(2, 1).unwrap()).unwrap().value;
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}
