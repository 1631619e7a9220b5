//! Norm-induced distances and unit-ball volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// A norm on a single real vector space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// ℓ2
    #[default]
    #[serde(alias = "l2")]
    Euclidean,
    /// ℓ∞
    #[serde(alias = "linf")]
    Chebyshev,
}

impl Metric {
    /// Distance between two points of equal dimension.
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(self.dist(a, b))
    }

    #[inline]
    pub(crate) fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        self.norm(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
    }

    /// Norm of a vector given by the absolute values of its coordinates.
    #[inline]
    pub(crate) fn norm(self, abs_coords: impl Iterator<Item = f64>) -> f64 {
        match self {
            Metric::Euclidean => abs_coords.map(|c| c * c).sum::<f64>().sqrt(),
            Metric::Chebyshev => abs_coords.fold(0.0, f64::max),
        }
    }

    /// Volume of the unit ball of this norm in `d` dimensions.
    pub fn unit_ball_volume(self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(match (self, d) {
            (Metric::Chebyshev, _) => 2f64.powi(d as i32),
            (Metric::Euclidean, 1) => 2.0,
            (Metric::Euclidean, 2) => std::f64::consts::PI,
            _ => self.ln_unit_ball_volume(d)?.exp(),
        })
    }

    /// Natural log of [`Metric::unit_ball_volume`]; finite for every `d`.
    pub fn ln_unit_ball_volume(self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let df = d as f64;
        Ok(match self {
            Metric::Chebyshev => df * std::f64::consts::LN_2,
            Metric::Euclidean => match d {
                1 => std::f64::consts::LN_2,
                2 => std::f64::consts::PI.ln(),
                _ => 0.5 * df * std::f64::consts::PI.ln() - special::lgamma(0.5 * df + 1.0),
            },
        })
    }

    pub fn parse(name: &str) -> Option<Metric> {
        match name {
            "l2" | "euclidean" => Some(Metric::Euclidean),
            "linf" | "chebyshev" | "max" => Some(Metric::Chebyshev),
            _ => None,
        }
    }
}

/// Max-composition of two marginal norms on the product space ℝ^{d_x} × ℝ^{d_y}:
/// `d((x, y), (x', y')) = max(‖x - x'‖, ‖y - y'‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointMetric {
    pub x_metric: Metric,
    pub y_metric: Metric,
    pub d_x: usize,
    pub d_y: usize,
}

impl JointMetric {
    pub fn new(x_metric: Metric, y_metric: Metric, d_x: usize, d_y: usize) -> Result<Self> {
        if d_x == 0 || d_y == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(JointMetric {
            x_metric,
            y_metric,
            d_x,
            d_y,
        })
    }

    /// ℓ∞ on both marginals, the usual KSG choice.
    pub fn chebyshev(d_x: usize, d_y: usize) -> Result<Self> {
        Self::new(Metric::Chebyshev, Metric::Chebyshev, d_x, d_y)
    }

    pub fn dim(&self) -> usize {
        self.d_x + self.d_y
    }

    /// Distance between two concatenated points `[x.., y..]`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        for p in [a, b] {
            if p.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    got: p.len(),
                });
            }
        }
        Ok(self.dist(a, b))
    }

    #[inline]
    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let (ax, ay) = a.split_at(self.d_x);
        let (bx, by) = b.split_at(self.d_x);
        self.x_metric.dist(ax, bx).max(self.y_metric.dist(ay, by))
    }
}

/// Any metric a neighbor index can be built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMetric {
    Single(Metric),
    Joint(JointMetric),
}

impl From<Metric> for IndexMetric {
    fn from(m: Metric) -> Self {
        IndexMetric::Single(m)
    }
}

impl From<JointMetric> for IndexMetric {
    fn from(m: JointMetric) -> Self {
        IndexMetric::Joint(m)
    }
}

impl IndexMetric {
    #[inline]
    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            IndexMetric::Single(m) => m.dist(a, b),
            IndexMetric::Joint(j) => j.dist(a, b),
        }
    }

    /// Norm of a per-coordinate absolute-difference vector. Monotone in each
    /// coordinate, so it bounds distances to every point of an axis-aligned box.
    #[inline]
    pub(crate) fn norm_of(&self, abs_diff: &[f64]) -> f64 {
        match self {
            IndexMetric::Single(m) => m.norm(abs_diff.iter().copied()),
            IndexMetric::Joint(j) => {
                let (dx, dy) = abs_diff.split_at(j.d_x);
                j.x_metric
                    .norm(dx.iter().copied())
                    .max(j.y_metric.norm(dy.iter().copied()))
            }
        }
    }

    pub fn dim_hint(&self) -> Option<usize> {
        match self {
            IndexMetric::Single(_) => None,
            IndexMetric::Joint(j) => Some(j.dim()),
        }
    }
}
