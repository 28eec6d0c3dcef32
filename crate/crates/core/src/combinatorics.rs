//! Binomial coefficients: exact in integers where they fit, log-gamma beyond.

use crate::special::ln_gamma;

/// Largest `n` for which [`ln_binomial`] takes the exact integer path.
pub const EXACT_LIMIT: u64 = 60;

/// Exact `C(n, k)`, or `None` on overflow of `u128`.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n <= EXACT_LIMIT {
        // C(60, 30) ~ 1.2e17 converts to f64 with relative error below 1e-16
        return libm::log(binomial_exact(n, k).unwrap() as f64);
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if n <= EXACT_LIMIT {
        binomial_exact(n, k).unwrap() as f64
    } else {
        libm::exp(ln_binomial(n, k))
    }
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(xs.iter().map(|x| libm::exp(x - max)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial_exact(5, 2), Some(10));
        assert_eq!(binomial_exact(0, 0), Some(1));
        assert_eq!(binomial_exact(3, 4), Some(0));
        assert_eq!(binomial_exact(60, 30), Some(118_264_581_564_861_424));
        assert!(binomial_exact(200, 100).is_none());
    }

    #[test]
    fn pascal_rule_exact() {
        for n in 1..=60u64 {
            for k in 1..n {
                assert_eq!(
                    binomial_exact(n, k).unwrap(),
                    binomial_exact(n - 1, k - 1).unwrap() + binomial_exact(n - 1, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn log_gamma_path_agrees_with_exact() {
        // u128 still holds C(120, k); compare against the log-gamma branch
        for k in [0u64, 1, 7, 30, 60, 119, 120] {
            let exact = libm::log(binomial_exact(120, k).unwrap() as f64);
            let approx = ln_binomial(120, k);
            assert!((exact - approx).abs() <= 1e-12 * exact.abs().max(1.0), "k={k}");
        }
    }
}
