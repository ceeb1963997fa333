//! Lower bounds on the drift polynomial and the hitting-time bounds that
//! follow from them.

use super::poly::{check_density, p_unchecked};
use super::{AnalysisError, DriftModel};
use crate::scalar::{binomial, Real};

/// Piecewise lower bound on `p(x)`:
/// `l (x^k + 1 - 2x)` below one half, and
/// `(l/k) (1-x)^k C(k, ceil(k/2)) ceil(k/2)` from one half up.
pub fn lower_bound_p<T: Real>(model: &DriftModel, x: T) -> Result<T, AnalysisError> {
    check_density(x)?;
    Ok(lower_bound_unchecked(model, x))
}

fn lower_bound_unchecked<T: Real>(model: &DriftModel, x: T) -> T {
    let k = model.k();
    let l = T::of_usize(model.l());
    let half = T::from_f64_lossy(0.5);
    if x < half {
        l * (x.powi(k as i32) + T::one() - T::of_usize(2) * x)
    } else {
        let m = model.threshold();
        l / T::of_usize(k)
            * (T::one() - x).powi(k as i32)
            * T::from_biguint(&binomial(k as u64, m as i64))
            * T::of_usize(m)
    }
}

/// Upper bounds on the time for the density to grow from `x0` to `h x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingBounds<T> {
    /// From the piecewise lower bound on `p`.
    pub closed_form: T,
    /// `x0 (h - 1) / p(h x0)`, never looser than `closed_form`.
    pub generic: T,
}

/// Both hitting-time bounds for target `h x0`, `1 <= h <= 1/x0`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
pub fn hitting_time_bound<T: Real>(model: &DriftModel, x0: T, h: T) -> Result<HittingBounds<T>, AnalysisError> {
    check_density(x0)?;
    let out_of_range = || AnalysisError::TargetOutOfRange {
        h: h.to_f64().unwrap_or(f64::NAN),
        x0: x0.to_f64().unwrap_or(f64::NAN),
    };
    if !(x0 > T::zero()) || !(h >= T::one()) {
        return Err(out_of_range());
    }
    let target = h * x0;
    // allow one rounding step past 1 when h was computed as 1/x0
    if target > T::one() + T::epsilon() * T::of_usize(4) {
        return Err(out_of_range());
    }
    let target = target.min(T::one());
    let rise = x0 * (h - T::one());
    if rise == T::zero() {
        return Ok(HittingBounds {
            closed_form: T::zero(),
            generic: T::zero(),
        });
    }
    Ok(HittingBounds {
        closed_form: rise / lower_bound_unchecked(model, target),
        generic: rise / p_unchecked(model, target),
    })
}
