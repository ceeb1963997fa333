//! Scalar abstractions for the analysis code.
//!
//! [`Scalar`] covers the closed-form probabilities, which are ratios of
//! integers and can be produced exactly (`BigRational`) or rounded
//! (`f32`, `f64`). [`Real`] covers the continuous model (polynomial, ODE,
//! bounds) and is implemented for the IEEE types only.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, One, ToPrimitive, Zero};

/// A number type that can hold a ratio of big integers.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync {
    /// `num / den`, rounded to nearest for inexact types. `den` must be
    /// nonzero.
    fn from_ratio(num: BigInt, den: BigInt) -> Self;

    fn to_f64_lossy(&self) -> f64;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(BigInt::from(v), BigInt::one())
    }
}

fn ratio_to_f64(num: BigInt, den: BigInt) -> f64 {
    BigRational::new(num, den).to_f64().unwrap_or(f64::NAN)
}

impl Scalar for f64 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        ratio_to_f64(num, den)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den).to_f32().unwrap_or(f32::NAN)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar for the continuous model.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {
    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize converts to float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to float")
    }

    fn from_biguint(v: &BigUint) -> Self {
        Self::from_f64_lossy(v.to_f64().unwrap_or(f64::INFINITY))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}
