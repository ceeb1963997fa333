//! Exact finite-`n` statistics, generic over [`Scalar`].

use num_bigint::BigInt;
use num_traits::Zero;

use super::{domain, AnalysisError};
use crate::scalar::{binomial, Scalar};

fn c(n: usize, k: i64) -> BigInt {
    BigInt::from(binomial(n as u64, k))
}

/// Probability that `s` of `l` uniformly flipped positions (out of `k`)
/// land on the `j` positions where the strings differ.
pub fn hypergeom_flip_prob<T: Scalar>(k: usize, j: usize, l: usize, s: usize) -> Result<T, AnalysisError> {
    if j > k || l > k || s > l {
        return Err(domain(format!("need j, l <= k and s <= l; got k={k} j={j} l={l} s={s}")));
    }
    let num = c(j, s as i64) * c(k - j, l as i64 - s as i64);
    Ok(T::from_ratio(num, c(k, l as i64)))
}

/// Expected net agreement gain of one flip of `l` positions when `j` of
/// the `k` sampled positions differ: `(2j/k - 1) l`.
pub fn signed_flip_identity<T: Scalar>(k: usize, j: usize, l: usize) -> Result<T, AnalysisError> {
    if k == 0 || j > k || l > k {
        return Err(domain(format!("need 1 <= k, j <= k, l <= k; got k={k} j={j} l={l}")));
    }
    let num = (BigInt::from(2 * j) - BigInt::from(k)) * BigInt::from(l);
    Ok(T::from_ratio(num, BigInt::from(k)))
}

fn check_drift(n: usize, x: usize, k: usize, l: usize) -> Result<(), AnalysisError> {
    if k == 0 || x > n || k > n || l > k {
        return Err(domain(format!("need x <= n, 1 <= k <= n, l <= k; got n={n} x={x} k={k} l={l}")));
    }
    Ok(())
}

/// `E[X(i+1) - X(i)]` given `X(i) = x` agreements out of `n`, flipping when
/// at least `r` of the `k` sampled positions disagree.
pub fn expected_drift_with_threshold<T: Scalar>(
    n: usize,
    x: usize,
    k: usize,
    l: usize,
    r: usize,
) -> Result<T, AnalysisError> {
    check_drift(n, x, k, l)?;
    if r > k {
        return Err(domain(format!("threshold {r} exceeds k={k}")));
    }
    let mut num = BigInt::zero();
    for j in r..=k {
        let weight = BigInt::from(l) * (BigInt::from(2 * j) - BigInt::from(k));
        num += weight * c(n - x, j as i64) * c(x, k as i64 - j as i64);
    }
    Ok(T::from_ratio(num, BigInt::from(k) * c(n, k as i64)))
}

/// Expected one-step change of the agreement count at the default
/// threshold `ceil(k/2)`.
pub fn expected_drift_exact<T: Scalar>(n: usize, x: usize, k: usize, l: usize) -> Result<T, AnalysisError> {
    expected_drift_with_threshold(n, x, k, l, k.div_ceil(2))
}

/// The same expectation summed over both the sample composition `j` and
/// the number `s` of flipped disagreements, without the closed-form inner
/// sum.
pub fn expected_drift_double_sum<T: Scalar>(n: usize, x: usize, k: usize, l: usize) -> Result<T, AnalysisError> {
    check_drift(n, x, k, l)?;
    let mut total = T::zero();
    for j in k.div_ceil(2)..=k {
        let sample: T = hypergeom_flip_prob_general(n, n - x, k, j);
        for s in 0..=l {
            let gain = T::from_int(2 * s as i64 - l as i64);
            total = total + gain * hypergeom_flip_prob::<T>(k, j, l, s)? * sample.clone();
        }
    }
    Ok(total)
}

/// `C(m, s) C(n - m, k - s) / C(n, k)` with the zero convention.
fn hypergeom_flip_prob_general<T: Scalar>(n: usize, m: usize, k: usize, s: usize) -> T {
    let num = c(m, s as i64) * c(n - m, k as i64 - s as i64);
    T::from_ratio(num, c(n, k as i64))
}
