//! Small statistics helpers for experiment aggregation and acceptance
//! checks.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample standard deviation; 0 below two samples.
pub fn sample_stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn standard_error(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sample_stddev(values) / (values.len() as f64).sqrt()
}

/// One-sided paired sign test for "differences are positive".
///
/// Zero differences are dropped; the p-value is the exact binomial tail
/// `P(X >= positives | n, 1/2)`. An all-zero sample returns 1.0.
pub fn sign_test_p_value(differences: &[f64]) -> f64 {
    let positives = differences.iter().filter(|&&d| d > 0.0).count();
    let negatives = differences.iter().filter(|&&d| d < 0.0).count();
    let n = positives + negatives;
    if n == 0 {
        return 1.0;
    }
    binomial_upper_tail(n, positives)
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`, computed exactly in log space.
fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    // ln C(n, i) built incrementally: C(n, 0) = 1,
    // C(n, i) = C(n, i-1) * (n - i + 1) / i.
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = 0.0f64;
    let mut tail = 0.0f64;
    for i in 0..=n {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        if i >= k {
            tail += (ln_choose + ln_half_n).exp();
        }
    }
    tail.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stddev_basics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((sample_stddev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-12);
        assert_eq!(sample_stddev(&[5.0]), 0.0);
        assert!((standard_error(&[1.0, 2.0, 3.0]) - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
    }

    // Hand-checked binomial tails: sum_{k=15}^{20} C(20,k) = 21700,
    // 21700 / 2^20 = 0.02069473...
    #[test]
    fn binomial_tail_matches_hand_computation() {
        let p15 = sign_test_p_value(&[1.0; 15].iter().chain([-1.0; 5].iter()).cloned().collect::<Vec<_>>());
        assert!((p15 - 21700.0 / 1_048_576.0).abs() < 1e-12);
        let p14: f64 = sign_test_p_value(
            &[1.0; 14].iter().chain([-1.0; 6].iter()).cloned().collect::<Vec<_>>(),
        );
        // sum_{k=14}^{20} C(20,k) = 60460
        assert!((p14 - 60460.0 / 1_048_576.0).abs() < 1e-12);
    }

    #[test]
    fn sign_test_edge_cases() {
        assert_eq!(sign_test_p_value(&[]), 1.0);
        assert_eq!(sign_test_p_value(&[0.0, 0.0]), 1.0);
        // All positive out of n: p = 2^-n.
        let p = sign_test_p_value(&[0.5; 10]);
        assert!((p - 2f64.powi(-10)).abs() < 1e-15);
        // Zeros are dropped, not counted.
        let p = sign_test_p_value(&[1.0, 0.0, 1.0]);
        assert!((p - 0.25).abs() < 1e-15);
    }
}
