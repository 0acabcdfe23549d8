//! Log-space special functions and combinatorial counts.
//!
//! Everything here works in nats. Counts of zero are represented by
//! `f64::NEG_INFINITY`; positive infinity and NaN are never produced for
//! valid inputs.

mod partitions;

pub use partitions::{
    dilog, log_q_asymptotic, log_q_partitions, log_q_with_provenance, LogQ,
    PartitionCountTable, Provenance,
};

use crate::error::{Error, Result};

/// A natural-log weight. `-inf` encodes a count of zero.
pub type LogWeight = f64;


/// Above this argument the Stirling difference is used for ratios of
/// gamma functions to avoid cancellation between two huge lgamma values.
const STIRLING_CUTOFF: f64 = 1.0e3;

/// `ln Γ(n+1)` for real `n ≥ 0`.
pub fn log_factorial(n: f64) -> Result<LogWeight> {
    if !(n >= 0.0) || n.is_infinite() {
        return Err(Error::Domain(format!("log_factorial of {n}")));
    }
    Ok(ln_fact(n))
}

/// Unchecked `ln Γ(n+1)`; callers guarantee `n ≥ 0`.
#[inline]
pub(crate) fn ln_fact(n: f64) -> f64 {
    if n <= 1.0 && (n == 0.0 || n == 1.0) {
        return 0.0;
    }
    libm::lgamma(n + 1.0)
}

#[inline]
fn stirling_tail(y: f64) -> f64 {
    let r = 1.0 / y;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))
}

/// `ln Γ(a+1) − ln Γ(b+1)` for `a ≥ b ≥ 0`, accurate when both are large.
#[inline]
pub(crate) fn ln_fact_ratio(a: f64, b: f64) -> f64 {
    if b < STIRLING_CUTOFF {
        return ln_fact(a) - ln_fact(b);
    }
    let d = a - b;
    let a1 = a + 1.0;
    d * a1.ln() - (b + 0.5) * (-d / a1).ln_1p() - d + stirling_tail(a1) - stirling_tail(b + 1.0)
}

/// Unchecked real-extended `ln C(n, k)`; `-inf` when `k > n` or `k < 0`.
#[inline]
pub(crate) fn ln_binom(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n || n < 0.0 {
        return f64::NEG_INFINITY;
    }
    if k == 0.0 || k == n {
        return 0.0;
    }
    let (small, large) = if k < n - k { (k, n - k) } else { (n - k, k) };
    ln_fact_ratio(n, large) - ln_fact(small)
}

/// `ln C(n, k)` through the log-gamma extension.
pub fn log_binomial(n: f64, k: f64) -> Result<LogWeight> {
    if !(n >= 0.0) || !(k >= 0.0) || n.is_infinite() || k.is_infinite() {
        return Err(Error::Domain(format!("log_binomial({n}, {k})")));
    }
    Ok(ln_binom(n, k))
}

/// `ln C(n+m−1, m)`: the number of n-tuples of nonnegative integers summing to m.
pub fn log_multiset(n: u64, m: u64) -> Result<LogWeight> {
    if n == 0 {
        return Err(Error::Domain("log_multiset needs n >= 1".into()));
    }
    Ok(ln_binom((n + m - 1) as f64, m as f64))
}

/// `ln m!!` for even `m`, computed as `ln(2^{m/2} (m/2)!)`.
pub fn log_double_factorial_even(m: u64) -> Result<LogWeight> {
    if m % 2 == 1 {
        return Err(Error::Domain(format!("double factorial of odd {m}")));
    }
    Ok(ln_double_fact_even(m as f64))
}

/// Real extension of `ln m!!` for even `m`: `(m/2) ln 2 + ln Γ(m/2 + 1)`.
#[inline]
pub(crate) fn ln_double_fact_even(m: f64) -> f64 {
    let h = 0.5 * m;
    h * std::f64::consts::LN_2 + ln_fact(h)
}

/// `ln(C(N,2) + 1)`, the uniform prior over the edge count.
#[inline]
pub fn log_edge_count_prior(n: u64) -> f64 {
    (pairs(n) + 1.0).ln()
}

/// `C(N, 2)` as a float.
#[inline]
pub fn pairs(n: u64) -> f64 {
    let n = n as f64;
    0.5 * n * (n - 1.0)
}

/// Overflow-safe `ln Σ exp(x_i)`.
///
/// Two passes: the maximum is found first, then the shifted exponentials
/// are added with a fixed pairwise tree (halves split at `len / 2`, leaves
/// of up to eight terms summed left to right). The result depends only on
/// the order of the input, never on thread scheduling.
pub fn log_sum_exp<I>(values: I) -> LogWeight
where
    I: IntoIterator<Item = f64>,
{
    let xs: Vec<f64> = values.into_iter().collect();
    log_sum_exp_slice(&xs)
}

/// Slice form of [`log_sum_exp`].
pub fn log_sum_exp_slice(xs: &[f64]) -> LogWeight {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let shifted: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

/// Sum with the same fixed pairwise tree used by [`log_sum_exp`].
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Binary entropy helper `x ln x` with the `0 ln 0 = 0` convention.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exact_binom(n: u64, k: u64) -> u128 {
        if k > n {
            return 0;
        }
        let mut c: u128 = 1;
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c
    }

    #[test]
    fn factorial_small_integers_match_products() {
        let mut prod = 1.0f64;
        for n in 0..=20u32 {
            if n > 0 {
                prod *= n as f64;
            }
            let v = log_factorial(n as f64).unwrap();
            if n <= 1 {
                assert_eq!(v, 0.0);
            } else {
                assert_relative_eq!(v, prod.ln(), max_relative = 1e-12);
            }
        }
        assert_relative_eq!(log_factorial(5.0).unwrap(), 120f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn factorial_half_integer() {
        // Γ(3.5) = 15√π / 8
        let oracle = (15.0 * std::f64::consts::PI.sqrt() / 8.0).ln();
        assert_relative_eq!(log_factorial(2.5).unwrap(), oracle, max_relative = 1e-13);
    }

    #[test]
    fn factorial_rejects_negative() {
        assert!(log_factorial(-0.5).is_err());
        assert!(log_factorial(f64::NAN).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert_relative_eq!(log_binomial(6.0, 2.0).unwrap(), 15f64.ln(), max_relative = 1e-13);
        assert_eq!(log_binomial(4.0, 0.0).unwrap(), 0.0);
        assert_eq!(log_binomial(3.0, 5.0).unwrap(), f64::NEG_INFINITY);
        assert!(log_binomial(-1.0, 0.0).is_err());
    }

    #[test]
    fn binomial_matches_exact_integers() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = exact_binom(n, k) as f64;
                assert_relative_eq!(
                    ln_binom(n as f64, k as f64),
                    exact.ln(),
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn stirling_ratio_agrees_with_lgamma_in_overlap() {
        for &(a, b) in &[(1.0e3, 1.0e3 - 7.0), (5.0e4, 4.0e4), (2.0e6, 1.99e6), (1.0e3 + 0.25, 1.0e3)] {
            let direct = libm::lgamma(a + 1.0) - libm::lgamma(b + 1.0);
            assert_relative_eq!(ln_fact_ratio(a, b), direct, max_relative = 1e-11);
        }
    }

    #[test]
    fn large_binomial_small_k_is_accurate() {
        // C(n,1) = n even when lgamma(n) is ~1e11
        let n = 5.0e9;
        assert_relative_eq!(ln_binom(n, 1.0), n.ln(), max_relative = 1e-13);
        // C(n,2) = n(n-1)/2
        assert_relative_eq!(ln_binom(n, 2.0), (n * (n - 1.0) / 2.0).ln(), max_relative = 1e-13);
    }

    #[test]
    fn multiset_examples() {
        assert_relative_eq!(log_multiset(3, 2).unwrap(), 6f64.ln(), max_relative = 1e-13);
        assert_eq!(log_multiset(1, 7).unwrap(), 0.0);
        // count 5-tuples of nonnegative integers summing to 5
        let mut count = 0u64;
        for a in 0..=5u32 {
            for b in 0..=5 - a {
                for c in 0..=5 - a - b {
                    for _d in 0..=5 - a - b - c {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 126);
        assert_relative_eq!(log_multiset(5, 5).unwrap(), (count as f64).ln(), max_relative = 1e-13);
        assert!(log_multiset(0, 3).is_err());
    }

    #[test]
    fn double_factorial_examples() {
        assert_eq!(log_double_factorial_even(0).unwrap(), 0.0);
        assert_relative_eq!(log_double_factorial_even(4).unwrap(), 8f64.ln(), max_relative = 1e-13);
        let prod: f64 = (1..=5).map(|i| (2 * i) as f64).product();
        assert_eq!(prod, 3840.0);
        assert_relative_eq!(log_double_factorial_even(10).unwrap(), prod.ln(), max_relative = 1e-13);
        assert!(log_double_factorial_even(3).is_err());
    }

    #[test]
    fn log_sum_exp_examples() {
        assert_relative_eq!(log_sum_exp([0.0, 0.0]), 2f64.ln(), max_relative = 1e-15);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, 3.5]), 3.5);
        let e = std::f64::consts::E;
        assert_relative_eq!(log_sum_exp([1.0, 2.0, 3.0]), (e + e * e + e * e * e).ln(), max_relative = 1e-15);
        assert_relative_eq!(log_sum_exp([1.0, 2.0, 3.0]), 3.407606, epsilon = 1e-6);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sum_exp_survives_huge_arguments() {
        let v = log_sum_exp([1.0e5, 1.0e5]);
        assert_relative_eq!(v, 1.0e5 + 2f64.ln(), max_relative = 1e-15);
        let v = log_sum_exp([-1.0e5, -1.0e5 - 1.0]);
        assert!(v.is_finite());
    }

    #[test]
    fn log_sum_exp_is_deterministic_for_long_inputs() {
        let xs: Vec<f64> = (0..10_007).map(|i| ((i * 7919) % 1000) as f64 * 1e-3).collect();
        let a = log_sum_exp_slice(&xs);
        let b = log_sum_exp(xs.iter().copied());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn xlogx_convention() {
        assert_eq!(xlogx(0.0), 0.0);
        assert_relative_eq!(xlogx(0.5), 0.5 * 0.5f64.ln());
    }
}
