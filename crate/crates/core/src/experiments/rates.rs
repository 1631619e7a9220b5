//! Predicted convergence exponents of bias and variance.
//!
//! All slopes are reported as decay exponents γ in O(N^{-γ}); logarithmic
//! factors are dropped. With τ the tail exponent in P(f(X) <= t) <= μ t^τ:
//!
//! | estimator | bias                                 | variance |
//! |-----------|--------------------------------------|----------|
//! | KL        | 2τ / (d_x + 2)                       | 1        |
//! | KSG       | min{2τ / (d_z + 2), min(d_x, d_y)/d_z} | 1      |
//!
//! For comparison, the minimax lower bound on the mean squared error of any
//! entropy estimator decays as N^{-4/(d_x+2)} up to log factors, so the
//! truncated KL bias rate is optimal up to those factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateEstimator {
    /// Entropy (KL, truncated or not).
    Entropy,
    Ksg,
}

impl From<EstimatorKind> for RateEstimator {
    fn from(kind: EstimatorKind) -> Self {
        match kind {
            EstimatorKind::Kl | EstimatorKind::TruncatedKl => RateEstimator::Entropy,
            EstimatorKind::Ksg => RateEstimator::Ksg,
        }
    }
}

/// Tail regime of the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// Exponentially decaying tails, τ = 1.
    Exponential,
    /// P(f(X) <= t) <= μ t^τ.
    Heavy { tau: f64 },
    /// τ derived from a finite moment E|X|^α < ∞: every τ < α/(α + d) is
    /// admissible, so the reported rate is the supremum, approached but not attained.
    Moment { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub estimator: RateEstimator,
    pub d_x: usize,
    /// 0 for entropy.
    #[serde(default)]
    pub d_y: usize,
    pub tail: Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalRates {
    pub bias_slope: f64,
    pub variance_slope: f64,
    /// τ actually used.
    pub tau: f64,
    /// True when τ came from a moment bound and the slope is a supremum.
    pub approached: bool,
}

impl RateModel {
    pub fn entropy(d_x: usize) -> Self {
        RateModel {
            estimator: RateEstimator::Entropy,
            d_x,
            d_y: 0,
            tail: Tail::Exponential,
        }
    }

    pub fn ksg(d_x: usize, d_y: usize) -> Self {
        RateModel {
            estimator: RateEstimator::Ksg,
            d_x,
            d_y,
            tail: Tail::Exponential,
        }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    /// Dimension governing the tail exponent: d_x for entropy, d_z for KSG.
    fn tail_dim(&self) -> usize {
        match self.estimator {
            RateEstimator::Entropy => self.d_x,
            RateEstimator::Ksg => self.d_x + self.d_y,
        }
    }

    /// (τ, approached)
    pub fn tau(&self) -> Result<(f64, bool)> {
        let (tau, approached) = match self.tail {
            Tail::Exponential => (1.0, false),
            Tail::Heavy { tau } => (tau, false),
            Tail::Moment { alpha } => {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::invalid("alpha", format!("must be finite and positive, got {alpha}")));
                }
                (alpha / (alpha + self.tail_dim() as f64), true)
            }
        };
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid("tau", format!("must lie in (0, 1], got {tau}")));
        }
        Ok((tau, approached))
    }
}

/// Bias and variance decay exponents predicted for `model`.
pub fn theoretical_rates(model: &RateModel) -> Result<TheoreticalRates> {
    if model.d_x == 0 {
        return Err(Error::invalid("dx", "must be at least 1"));
    }
    let (tau, approached) = model.tau()?;
    let bias_slope = match model.estimator {
        RateEstimator::Entropy => 2.0 * tau / (model.d_x as f64 + 2.0),
        RateEstimator::Ksg => {
            if model.d_y == 0 {
                return Err(Error::invalid("dy", "KSG needs d_y >= 1"));
            }
            let dz = (model.d_x + model.d_y) as f64;
            let smooth = 2.0 * tau / (dz + 2.0);
            let marginal = model.d_x.min(model.d_y) as f64 / dz;
            smooth.min(marginal)
        }
    };
    Ok(TheoreticalRates {
        bias_slope,
        variance_slope: 1.0,
        tau,
        approached,
    })
}
