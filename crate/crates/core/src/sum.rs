//! Order-fixed floating-point reductions.

const BLOCK: usize = 32;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so the result is reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Mean of the values taken in ascending order, so the result does not
/// depend on how the input was ordered.
pub fn sorted_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    mean(&values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
    }

    #[test]
    fn sorted_mean_ignores_order() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 0.1 + 1e-3 / (i + 1) as f64).collect();
        let mut r = v.clone();
        r.reverse();
        assert_eq!(sorted_mean(v).to_bits(), sorted_mean(r).to_bits());
    }

    #[test]
    fn beats_naive_on_long_constant_sums() {
        let v = vec![0.1; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        assert!((pairwise_sum(&v) - exact).abs() < 1e-9);
    }
}
