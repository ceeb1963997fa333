//! The density drift polynomial
//! `p(x) = sum_{j >= ceil(k/2)} l (2j/k - 1) C(k, j) (1-x)^j x^(k-j)`.

use super::{AnalysisError, DriftModel};
use crate::scalar::{binomial, Real};

pub(crate) fn check_density<T: Real>(x: T) -> Result<(), AnalysisError> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(AnalysisError::DensityOutOfRange(x.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn coeff<T: Real>(model: &DriftModel, j: usize) -> T {
    let k = model.k();
    let weight = T::of_usize(model.l()) * (T::of_usize(2 * j) - T::of_usize(k)) / T::of_usize(k);
    weight * T::from_biguint(&binomial(k as u64, j as i64))
}

/// `p(x)` without the domain check; callers clamp.
pub(crate) fn p_unchecked<T: Real>(model: &DriftModel, x: T) -> T {
    let k = model.k();
    let y = T::one() - x;
    (model.threshold()..=k).fold(T::zero(), |acc, j| {
        acc + coeff::<T>(model, j) * y.powi(j as i32) * x.powi((k - j) as i32)
    })
}

/// Drift of the agreement density at `x`.
pub fn p_of_x<T: Real>(model: &DriftModel, x: T) -> Result<T, AnalysisError> {
    check_density(x)?;
    Ok(p_unchecked(model, x))
}

/// `dp/dx`, differentiated term by term.
pub fn p_derivative<T: Real>(model: &DriftModel, x: T) -> Result<T, AnalysisError> {
    check_density(x)?;
    let k = model.k();
    let y = T::one() - x;
    let mut acc = T::zero();
    for j in model.threshold()..=k {
        let c = coeff::<T>(model, j);
        let m = k - j;
        if j > 0 {
            acc = acc - c * T::of_usize(j) * y.powi(j as i32 - 1) * x.powi(m as i32);
        }
        if m > 0 {
            acc = acc + c * T::of_usize(m) * y.powi(j as i32) * x.powi(m as i32 - 1);
        }
    }
    Ok(acc)
}

/// Largest `|p'(x)|` over `points` equally spaced samples of `[0, 1]`.
pub fn lipschitz_estimate_on_grid<T: Real>(model: &DriftModel, points: usize) -> T {
    let points = points.max(2);
    let last = T::of_usize(points - 1);
    (0..points)
        .map(|i| {
            let x = (T::of_usize(i) / last).min(T::one());
            p_derivative(model, x).expect("grid lies in [0, 1]").abs()
        })
        .fold(T::zero(), T::max)
}

/// Lipschitz constant estimate for `p` on a 10^4-point grid.
pub fn lipschitz_estimate<T: Real>(model: &DriftModel) -> T {
    lipschitz_estimate_on_grid(model, 10_000)
}
