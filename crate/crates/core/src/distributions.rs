//! Synthetic distributions with known entropy or mutual information.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::sample::SampleSet;
use crate::seeding::trial_rng;

/// A synthetic distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// N(0, I_d).
    GaussianStd { d: usize },
    /// (X, Y) ~ N(0, K) with K_ij = ρ + (1 - ρ)δ_ij over d_x + d_y coordinates.
    JointGaussianEquicorr { d_x: usize, d_y: usize, rho: f64 },
    /// Uniform on [0, 1]^d.
    Uniform01 { d: usize },
    Exponential { rate: f64 },
    /// Standard Cauchy (location 0, scale 1), one-dimensional.
    Cauchy,
    PathologicalMixtureLite(PathologicalMixtureLite),
}

/// Draws from a distribution: one sample set, or an aligned (x, y) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Draw {
    Single(SampleSet),
    Joint(SampleSet, SampleSet),
}

impl Draw {
    pub fn single(self) -> Option<SampleSet> {
        match self {
            Draw::Single(s) => Some(s),
            Draw::Joint(..) => None,
        }
    }

    pub fn joint(self) -> Option<(SampleSet, SampleSet)> {
        match self {
            Draw::Joint(x, y) => Some((x, y)),
            Draw::Single(_) => None,
        }
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::GaussianStd { d } | DistributionSpec::Uniform01 { d } => {
                if d == 0 {
                    return Err(Error::ZeroDimension);
                }
            }
            DistributionSpec::JointGaussianEquicorr { d_x, d_y, rho } => {
                if d_x == 0 || d_y == 0 {
                    return Err(Error::ZeroDimension);
                }
                equicorr_ln_det(d_x + d_y, rho)?;
            }
            DistributionSpec::Exponential { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(Error::invalid("rate", format!("must be finite and positive, got {rate}")));
                }
            }
            DistributionSpec::Cauchy => {}
            DistributionSpec::PathologicalMixtureLite(p) => p.validate()?,
        }
        Ok(())
    }

    /// Total dimension of one draw (d_x + d_y for joint families).
    pub fn dim(&self) -> usize {
        match *self {
            DistributionSpec::GaussianStd { d } | DistributionSpec::Uniform01 { d } => d,
            DistributionSpec::JointGaussianEquicorr { d_x, d_y, .. } => d_x + d_y,
            _ => 1,
        }
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, DistributionSpec::JointGaussianEquicorr { .. })
    }

    /// `n` i.i.d. draws, determined entirely by `(seed, trial)` and `n`.
    pub fn sample(&self, n: usize, seed: u64, trial: u64) -> Result<Draw> {
        let mut rng = trial_rng(seed, n as u64, trial);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Draw> {
        self.validate()?;
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        let draw = match *self {
            DistributionSpec::GaussianStd { d } => {
                let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                Draw::Single(SampleSet::new(data, d)?)
            }
            DistributionSpec::Uniform01 { d } => {
                let data = (0..n * d).map(|_| rng.random::<f64>()).collect();
                Draw::Single(SampleSet::new(data, d)?)
            }
            DistributionSpec::Exponential { rate } => {
                let exp = Exp::new(rate).map_err(|e| Error::invalid("rate", e.to_string()))?;
                let data = (0..n).map(|_| exp.sample(rng)).collect();
                Draw::Single(SampleSet::new(data, 1)?)
            }
            DistributionSpec::Cauchy => {
                let c = Cauchy::new(0.0, 1.0).expect("valid parameters");
                let data = (0..n).map(|_| c.sample(rng)).collect();
                Draw::Single(SampleSet::new(data, 1)?)
            }
            DistributionSpec::JointGaussianEquicorr { d_x, d_y, rho } => {
                let dz = d_x + d_y;
                let chol = equicorr_cholesky(dz, rho)?;
                let mut xs = Vec::with_capacity(n * d_x);
                let mut ys = Vec::with_capacity(n * d_y);
                let mut g = vec![0.0; dz];
                for _ in 0..n {
                    for v in g.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    for r in 0..dz {
                        let z: f64 = (0..=r).map(|c| chol[r * dz + c] * g[c]).sum();
                        if r < d_x {
                            xs.push(z);
                        } else {
                            ys.push(z);
                        }
                    }
                }
                Draw::Joint(SampleSet::new(xs, d_x)?, SampleSet::new(ys, d_y)?)
            }
            DistributionSpec::PathologicalMixtureLite(p) => {
                let data = (0..n).map(|_| p.draw(rng)).collect();
                Draw::Single(SampleSet::new(data, 1)?)
            }
        };
        Ok(draw)
    }

    /// Differential entropy in nats (joint entropy for joint families).
    pub fn true_entropy(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            DistributionSpec::GaussianStd { d } => 0.5 * d as f64 * (2.0 * PI * E).ln(),
            DistributionSpec::Uniform01 { .. } => 0.0,
            DistributionSpec::Exponential { rate } => 1.0 - rate.ln(),
            DistributionSpec::Cauchy => (4.0 * PI).ln(),
            DistributionSpec::JointGaussianEquicorr { d_x, d_y, rho } => {
                let dz = (d_x + d_y) as f64;
                0.5 * (dz * (2.0 * PI * E).ln() + equicorr_ln_det(d_x + d_y, rho)?)
            }
            DistributionSpec::PathologicalMixtureLite(p) => p.entropy_by_quadrature(),
        })
    }

    /// Mutual information I(X; Y) in nats; joint Gaussian only.
    pub fn true_mi(&self) -> Result<f64> {
        match *self {
            DistributionSpec::JointGaussianEquicorr { d_x, d_y, rho } => {
                if d_x == 0 || d_y == 0 {
                    return Err(Error::ZeroDimension);
                }
                let joint = equicorr_ln_det(d_x + d_y, rho)?;
                Ok(0.5 * (equicorr_ln_det(d_x, rho)? + equicorr_ln_det(d_y, rho)? - joint))
            }
            _ => Err(Error::invalid("distribution", "mutual information is defined only for joint_gaussian_equicorr")),
        }
    }
}

/// ln det of the d×d equicorrelation matrix, from its eigenvalues
/// 1 - ρ (multiplicity d - 1) and 1 + (d - 1)ρ.
pub fn equicorr_ln_det(d: usize, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("rho", format!("|rho| must be < 1, got {rho}")));
    }
    let top = 1.0 + (d as f64 - 1.0) * rho;
    if !(top > 0.0) {
        return Err(Error::invalid(
            "rho",
            format!("equicorrelation matrix of size {d} is not positive definite for rho = {rho}"),
        ));
    }
    Ok((d as f64 - 1.0) * (1.0 - rho).ln() + top.ln())
}

/// Lower Cholesky factor (row-major) of the equicorrelation matrix.
fn equicorr_cholesky(d: usize, rho: f64) -> Result<Vec<f64>> {
    equicorr_ln_det(d, rho)?;
    let k = |i: usize, j: usize| if i == j { 1.0 } else { rho };
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|c| l[i * d + c] * l[j * d + c]).sum();
            l[i * d + j] = if i == j {
                (k(i, i) - s).sqrt()
            } else {
                (k(i, j) - s) / l[j * d + j]
            };
        }
    }
    Ok(l)
}

/// A one-dimensional mixture of narrow, widely separated bumps.
///
/// Component j (1-based) has width 1/λ_j with λ_j = j^{4/3} and mass
/// 90/(π⁴ j⁴); mass left over after `n_components` terms goes to component 1.
/// Components sit at a_j = Σ_{i<j} 2/λ_i + 1/λ_j and are then moved by
/// δ_j = min(2^{j⁴}, j · shift_cap), so light components end up isolated far
/// from everything else. The shift only rearranges mass, leaving the entropy
/// equal to that of the unshifted mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathologicalMixtureLite {
    #[serde(default = "default_components")]
    pub n_components: usize,
    #[serde(default = "default_shift_cap")]
    pub shift_cap: f64,
}

fn default_components() -> usize {
    8
}

fn default_shift_cap() -> f64 {
    1e6
}

impl Default for PathologicalMixtureLite {
    fn default() -> Self {
        PathologicalMixtureLite {
            n_components: default_components(),
            shift_cap: default_shift_cap(),
        }
    }
}

/// Bump mass ∫g = 90/π⁴.
pub const BUMP_MASS: f64 = 90.0 / (PI * PI * PI * PI);

/// Unit-mass bump 30 (1/4 - t²)² on [-1/2, 1/2]; it is the Beta(3, 3)
/// density shifted by -1/2.
pub fn unit_bump(t: f64) -> f64 {
    if t.abs() >= 0.5 {
        return 0.0;
    }
    let s = 0.25 - t * t;
    30.0 * s * s
}

/// The bump g = (90/π⁴) · unit_bump.
pub fn bump(t: f64) -> f64 {
    BUMP_MASS * unit_bump(t)
}

/// One mixture component on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub lambda: f64,
    /// Center after shifting.
    pub center: f64,
}

impl Component {
    pub fn support(&self) -> (f64, f64) {
        let half = 0.5 / self.lambda;
        (self.center - half, self.center + half)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.weight * self.lambda * unit_bump(self.lambda * (x - self.center))
    }
}

impl PathologicalMixtureLite {
    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(Error::invalid("n_components", "must be at least 1"));
        }
        if !(self.shift_cap > 0.0) || !self.shift_cap.is_finite() {
            return Err(Error::invalid("shift_cap", format!("must be finite and positive, got {}", self.shift_cap)));
        }
        Ok(())
    }

    pub fn lambda(j: usize) -> f64 {
        (j as f64).powf(4.0 / 3.0)
    }

    /// Shift applied to component j.
    pub fn shift(&self, j: usize) -> f64 {
        let exponent = (j as f64).powi(4);
        2f64.powf(exponent).min(j as f64 * self.shift_cap)
    }

    /// Components in order j = 1..=n_components, shifted.
    pub fn components(&self) -> Vec<Component> {
        self.build_components(true)
    }

    /// Components without the shifts δ_j.
    pub fn unshifted_components(&self) -> Vec<Component> {
        self.build_components(false)
    }

    fn build_components(&self, shifted: bool) -> Vec<Component> {
        let m = self.n_components;
        let mut out = Vec::with_capacity(m);
        let mut offset = 0.0; // Σ_{i<j} 2/λ_i
        let tail: f64 = (2..=m).map(|j| BUMP_MASS / (j as f64).powi(4)).sum();
        for j in 1..=m {
            let lambda = Self::lambda(j);
            let weight = if j == 1 {
                1.0 - tail
            } else {
                BUMP_MASS / (j as f64).powi(4)
            };
            let a_j = offset + 1.0 / lambda;
            let center = if shifted { a_j + self.shift(j) } else { a_j };
            out.push(Component { weight, lambda, center });
            offset += 2.0 / lambda;
        }
        out
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components().iter().map(|c| c.density(x)).sum()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let comps = self.components();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = comps[comps.len() - 1];
        for c in &comps {
            acc += c.weight;
            if u < acc {
                chosen = *c;
                break;
            }
        }
        // median of five uniforms ~ Beta(3, 3)
        let mut u5 = [0.0f64; 5];
        for v in u5.iter_mut() {
            *v = rng.random();
        }
        u5.sort_by(f64::total_cmp);
        chosen.center + (u5[2] - 0.5) / chosen.lambda
    }

    /// -∫ f ln f, integrated numerically over each component's support.
    pub fn entropy_by_quadrature(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                let (lo, hi) = c.support();
                let integrand = |x: f64| {
                    let f = c.density(x);
                    if f > 0.0 {
                        -f * f.ln()
                    } else {
                        0.0
                    }
                };
                integrate(&integrand, lo, hi, 1e-12)
            })
            .sum()
    }

    /// ∫ f over the supports, by quadrature.
    pub fn total_mass_by_quadrature(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                let (lo, hi) = c.support();
                integrate(&|x| c.density(x), lo, hi, 1e-13)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn det3(m: [[f64; 3]; 3]) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[test]
    fn closed_form_entropies() {
        assert_eq!(DistributionSpec::Uniform01 { d: 3 }.true_entropy().unwrap(), 0.0);
        assert_abs_diff_eq!(DistributionSpec::GaussianStd { d: 1 }.true_entropy().unwrap(), 1.418_938_533_204_672_7, epsilon = 1e-12);
        assert_abs_diff_eq!(DistributionSpec::Cauchy.true_entropy().unwrap(), 2.531_024_246_969_290_7, epsilon = 1e-12);
        assert_abs_diff_eq!(DistributionSpec::Exponential { rate: 2.0 }.true_entropy().unwrap(), 1.0 - 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn mi_examples() {
        let mi = |dx, dy, rho| DistributionSpec::JointGaussianEquicorr { d_x: dx, d_y: dy, rho }.true_mi().unwrap();
        assert_eq!(mi(1, 1, 0.0), 0.0);
        assert_abs_diff_eq!(mi(1, 1, 0.6), -0.5 * (1.0f64 - 0.36).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(mi(1, 1, 0.6), 0.223_143_551_314_209_7, epsilon = 1e-12);
        // independent 3x3 determinant
        let r: f64 = 0.6;
        let k = [[1.0, r, r], [r, 1.0, r], [r, r, 1.0]];
        let det_y = 1.0 - r * r;
        let oracle = 0.5 * (det_y.ln() - det3(k).ln());
        assert_abs_diff_eq!(mi(1, 2, 0.6), oracle, epsilon = 1e-13);
        assert!(DistributionSpec::JointGaussianEquicorr { d_x: 1, d_y: 1, rho: 1.0 }.true_mi().is_err());
        assert!(DistributionSpec::JointGaussianEquicorr { d_x: 1, d_y: 2, rho: -0.6 }.true_mi().is_err());
        assert!(DistributionSpec::GaussianStd { d: 2 }.true_mi().is_err());
    }

    #[test]
    fn mi_nonnegative_and_increasing_in_abs_rho() {
        for (dx, dy) in [(1, 1), (1, 2), (2, 3)] {
            let lo = -1.0 / (dx + dy - 1) as f64;
            let mut prev = 0.0;
            for i in 0..=95 {
                let rho = i as f64 / 100.0;
                let v = DistributionSpec::JointGaussianEquicorr { d_x: dx, d_y: dy, rho }.true_mi().unwrap();
                assert!(v >= 0.0 && v >= prev);
                prev = v;
            }
            let mut prev = 0.0;
            let mut rho = 0.0;
            while rho - 0.01 > lo {
                rho -= 0.01;
                let v = DistributionSpec::JointGaussianEquicorr { d_x: dx, d_y: dy, rho }.true_mi().unwrap();
                assert!(v >= 0.0 && v >= prev - 1e-15, "dx={dx} dy={dy} rho={rho}");
                prev = v;
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::GaussianStd { d: 2 };
        assert_eq!(spec.sample(50, 3, 9).unwrap(), spec.sample(50, 3, 9).unwrap());
        assert_ne!(spec.sample(50, 3, 9).unwrap(), spec.sample(50, 3, 10).unwrap());
    }

    #[test]
    fn gaussian_moments() {
        let s = DistributionSpec::GaussianStd { d: 2 }.sample(1000, 1, 0).unwrap().single().unwrap();
        for c in 0..2 {
            let col: Vec<f64> = s.rows().map(|r| r[c]).collect();
            let m = col.iter().sum::<f64>() / 1000.0;
            assert!(m.abs() < 4.0 / 1000f64.sqrt());
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 999.0;
            // Var of the sample variance is 2/(n-1) for a unit Gaussian
            assert!((var - 1.0).abs() < 5.0 * (2.0f64 / 999.0).sqrt());
        }
    }

    #[test]
    fn joint_gaussian_correlation() {
        let spec = DistributionSpec::JointGaussianEquicorr { d_x: 1, d_y: 1, rho: 0.6 };
        let (x, y) = spec.sample(100_000, 5, 0).unwrap().joint().unwrap();
        let n = x.len() as f64;
        let (xs, ys) = (x.as_slice(), y.as_slice());
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
        let vx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>() / n;
        let vy: f64 = ys.iter().map(|b| (b - my) * (b - my)).sum::<f64>() / n;
        assert!((cov / (vx * vy).sqrt() - 0.6).abs() < 0.01);
    }

    #[test]
    fn unsupported_parameters() {
        assert!(DistributionSpec::GaussianStd { d: 0 }.sample(10, 0, 0).is_err());
        assert!(DistributionSpec::Exponential { rate: -1.0 }.sample(10, 0, 0).is_err());
        assert!(DistributionSpec::Uniform01 { d: 1 }.sample(1, 0, 0).is_err());
        let bad = PathologicalMixtureLite { n_components: 0, shift_cap: 1e6 };
        assert!(DistributionSpec::PathologicalMixtureLite(bad).sample(10, 0, 0).is_err());
    }

    #[test]
    fn bump_mass() {
        assert_abs_diff_eq!(integrate(&bump, -0.5, 0.5, 1e-14), BUMP_MASS, epsilon = 1e-12);
    }

    #[test]
    fn mixture_integrates_to_one() {
        for p in [PathologicalMixtureLite::default(), PathologicalMixtureLite { n_components: 3, shift_cap: 50.0 }] {
            assert_abs_diff_eq!(p.total_mass_by_quadrature(), 1.0, epsilon = 1e-9);
            let tail: f64 = p.components()[1..].iter().map(|c| c.weight).sum();
            assert!(tail <= 1.0);
        }
    }

    #[test]
    fn mixture_weights_and_layout() {
        let p = PathologicalMixtureLite::default();
        let comps = p.components();
        assert_eq!(comps.len(), 8);
        for (j, c) in comps.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(c.weight, 90.0 / (PI.powi(4) * ((j + 1) as f64).powi(4)), epsilon = 1e-16);
        }
        assert_abs_diff_eq!(p.shift(1), 2.0);
        assert_abs_diff_eq!(p.shift(2), 65536.0);
        assert_abs_diff_eq!(p.shift(3), 3e6);
        // supports are disjoint and ordered, shifted or not
        for comps in [p.components(), p.unshifted_components()] {
            for w in comps.windows(2) {
                assert!(w[0].support().1 < w[1].support().0);
            }
        }
    }

    #[test]
    fn mixture_entropy_matches_decomposition() {
        // Disjoint components: h = -Σ w_j ln(w_j λ_j) + h(unit bump),
        // with h(unit bump) = -∫ b ln b from an independent fine Riemann sum.
        let m = 200_000;
        let h_unit: f64 = (0..m)
            .map(|i| {
                let t = -0.5 + (i as f64 + 0.5) / m as f64;
                let b = unit_bump(t);
                if b > 0.0 { -b * b.ln() / m as f64 } else { 0.0 }
            })
            .sum();
        let p = PathologicalMixtureLite::default();
        let oracle: f64 = p.components().iter().map(|c| -c.weight * (c.weight * c.lambda).ln()).sum::<f64>() + h_unit;
        assert_abs_diff_eq!(p.entropy_by_quadrature(), oracle, epsilon = 1e-6);
        let unshifted: f64 = p
            .unshifted_components()
            .iter()
            .map(|c| -c.weight * (c.weight * c.lambda).ln())
            .sum::<f64>()
            + h_unit;
        assert_abs_diff_eq!(unshifted, oracle, epsilon = 1e-12);
    }

    #[test]
    fn mixture_samples_land_in_supports() {
        let p = PathologicalMixtureLite::default();
        let s = DistributionSpec::PathologicalMixtureLite(p).sample(5000, 2, 0).unwrap().single().unwrap();
        let comps = p.components();
        let mut counts = vec![0usize; comps.len()];
        for &x in s.as_slice() {
            let j = comps
                .iter()
                .position(|c| {
                    let (lo, hi) = c.support();
                    x > lo && x < hi
                })
                .expect("sample outside every support");
            counts[j] += 1;
        }
        // component 1 carries ~92% of the mass
        assert!(counts[0] > 4500);
    }
}
