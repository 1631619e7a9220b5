//! Digamma and log-gamma for positive real arguments.
//!
//! Both functions shift the argument upward with the recurrence until it is
//! large enough for the asymptotic (Stirling-type) series to converge to
//! double precision, then undo the shift.

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

const DIGAMMA_SHIFT: f64 = 10.0;
const LGAMMA_SHIFT: f64 = 10.0;

// B_{2n} / (2n) for n = 1..=7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

// B_{2n} / (2n (2n - 1)) for n = 1..=7.
const STIRLING_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

/// The digamma function ψ(t) = Γ'(t)/Γ(t) for t > 0.
pub fn digamma(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("digamma needs a finite t > 0, got {t}")));
    }
    Ok(psi(t))
}

/// ln Γ(t) for t > 0.
pub fn log_gamma(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("log_gamma needs a finite t > 0, got {t}")));
    }
    Ok(lgamma(t))
}

/// Unchecked digamma; callers guarantee `t > 0`.
pub(crate) fn psi(mut t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let mut shift = 0.0;
    while t < DIGAMMA_SHIFT {
        shift += 1.0 / t;
        t += 1.0;
    }
    let inv2 = 1.0 / (t * t);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_SERIES {
        series += c * pow;
        pow *= inv2;
    }
    t.ln() - 0.5 / t - series - shift
}

pub(crate) fn lgamma(mut t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let mut log_prod = 0.0;
    while t < LGAMMA_SHIFT {
        log_prod += t.ln();
        t += 1.0;
    }
    let inv = 1.0 / t;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING_SERIES {
        series += c * pow;
        pow *= inv2;
    }
    (t - 0.5) * t.ln() - t + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - log_prod
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -0.577_215_664_901_532_86, epsilon = 1e-14);
    }

    #[test]
    fn digamma_at_two() {
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 0.422_784_335_098_467_14, epsilon = 1e-14);
    }

    #[test]
    fn digamma_large_argument_matches_independent_series() {
        // ln t - 1/(2t) - 1/(12 t^2) + 1/(120 t^4), truncation error ~ 1e-20 at t = 1000
        let t: f64 = 1000.0;
        let oracle = t.ln() - 1.0 / (2.0 * t) - 1.0 / (12.0 * t * t) + 1.0 / (120.0 * t.powi(4));
        assert_abs_diff_eq!(digamma(t).unwrap(), oracle, epsilon = 1e-10);
    }

    #[test]
    fn digamma_half() {
        // ψ(1/2) = -γ - 2 ln 2
        let expected = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert_abs_diff_eq!(digamma(0.5).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_known_values() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(log_gamma(2.0).unwrap(), 0.0, epsilon = 1e-14);
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() <= 1e-12 * half);
        let fact10 = 3_628_800f64.ln();
        assert!((log_gamma(11.0).unwrap() - fact10).abs() <= 1e-12 * fact10);
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut log_fact = 0.0f64;
        for n in 1..170u32 {
            // log_fact = ln((n-1)!)
            let got = log_gamma(n as f64).unwrap();
            let tol = 1e-12 * log_fact.abs().max(1.0);
            assert!((got - log_fact).abs() <= tol, "n = {n}: {got} vs {log_fact}");
            log_fact += (n as f64).ln();
        }
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-2.0).is_err());
    }

    #[test]
    fn digamma_recurrence_on_log_grid() {
        let mut t: f64 = 0.5;
        while t <= 1e6 {
            let lhs = digamma(t + 1.0).unwrap() - digamma(t).unwrap();
            assert!((lhs - 1.0 / t).abs() <= 1e-12, "t = {t}");
            t *= 1.07;
        }
    }

    #[test]
    fn digamma_strictly_increasing() {
        let grid: Vec<f64> = (0..4000).map(|i| 0.01 + i as f64 * 0.05).collect();
        for w in grid.windows(2) {
            assert!(digamma(w[1]).unwrap() > digamma(w[0]).unwrap());
        }
    }
}
