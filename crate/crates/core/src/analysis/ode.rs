//! Fixed-step RK4 for `dx/dt = p(x)` and trajectory CSV I/O.

use std::io::{Read, Write};

use super::poly::{check_density, p_unchecked};
use super::{AnalysisError, DriftModel};
use crate::scalar::Real;

/// Fixed-step samples `(t, x(t))` of the density ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution<T> {
    pub samples: Vec<(T, T)>,
    pub dt: T,
    pub x0: T,
}

impl<T: Real> OdeSolution<T> {
    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn last(&self) -> (T, T) {
        *self.samples.last().expect("a solution has at least the initial sample")
    }

    /// Linear interpolation; clamps outside the sampled range.
    pub fn value_at(&self, t: T) -> T {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        let i = s.partition_point(|p| p.0 < t);
        if i >= s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, x0) = s[i - 1];
        let (t1, x1) = s[i];
        if t1 == t0 {
            return x1;
        }
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

fn clamp01<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

fn rk4_step<T: Real>(model: &DriftModel, x: T, h: T) -> T {
    let two = T::of_usize(2);
    let six = T::of_usize(6);
    let f = |v: T| p_unchecked(model, clamp01(v));
    let k1 = f(x);
    let k2 = f(x + h * k1 / two);
    let k3 = f(x + h * k2 / two);
    let k4 = f(x + h * k3);
    x + h * (k1 + two * k2 + two * k3 + k4) / six
}

/// Integrates from `x(0) = x0` to `t_end`. The final step is shortened if
/// `dt` does not divide `t_end`. Samples are clamped to `[0, 1]` and kept
/// nondecreasing.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
pub fn integrate_ode<T: Real>(model: &DriftModel, x0: T, t_end: T, dt: T) -> Result<OdeSolution<T>, AnalysisError> {
    check_density(x0)?;
    if !(dt > T::zero()) || !(t_end >= dt) || !t_end.is_finite() {
        return Err(AnalysisError::BadStep);
    }
    // tolerate float noise in t_end / dt
    let ratio = t_end / dt;
    let mut steps = ratio.round();
    if (ratio - steps).abs() > T::from_f64_lossy(1e-9) * ratio.max(T::one()) {
        steps = ratio.ceil();
    }
    let steps = steps.to_usize().ok_or(AnalysisError::BadStep)?;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((T::zero(), x0));
    let mut x = x0;
    for i in 1..=steps {
        let t_prev = T::of_usize(i - 1) * dt;
        let t = if i == steps { t_end } else { T::of_usize(i) * dt };
        let next = clamp01(rk4_step(model, x, t - t_prev));
        x = next.max(x);
        samples.push((t, x));
    }
    Ok(OdeSolution { samples, dt, x0 })
}

/// First time the ODE started at `x0` reaches `target`, stepping with `dt`
/// and bisecting the crossing step. `None` if not reached by `t_max`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
pub fn ode_hitting_time<T: Real>(
    model: &DriftModel,
    x0: T,
    target: T,
    dt: T,
    t_max: T,
) -> Result<Option<T>, AnalysisError> {
    check_density(x0)?;
    check_density(target)?;
    if !(dt > T::zero()) {
        return Err(AnalysisError::BadStep);
    }
    if x0 >= target {
        return Ok(Some(T::zero()));
    }
    // p(1) = 0 and p is Lipschitz, so 1 is not reached in finite time
    if target >= T::one() {
        return Ok(None);
    }
    let mut t = T::zero();
    let mut x = x0;
    while t < t_max {
        let next = rk4_step(model, x, dt);
        if next >= target {
            let (mut lo, mut hi) = (T::zero(), dt);
            for _ in 0..80 {
                let mid = (lo + hi) / T::of_usize(2);
                if rk4_step(model, x, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(t + hi));
        }
        if next <= x {
            return Ok(None);
        }
        x = next;
        t = t + dt;
    }
    Ok(None)
}

/// `v` in plain decimal with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes `t,x` rows with 9 significant digits.
pub fn write_ode_csv<T: Real, W: Write>(sol: &OdeSolution<T>, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| AnalysisError::Csv(e.to_string());
    w.write_record(["t", "x"]).map_err(err)?;
    for &(t, x) in &sol.samples {
        let (t, x) = (t.to_f64().unwrap_or(f64::NAN), x.to_f64().unwrap_or(f64::NAN));
        w.write_record([format_significant(t, 9), format_significant(x, 9)])
            .map_err(err)?;
    }
    w.flush().map_err(|e| AnalysisError::Csv(e.to_string()))
}

/// Reads a `t,x` trajectory.
pub fn read_ode_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let mut r = csv::Reader::from_reader(input);
    let err = |e: csv::Error| AnalysisError::Csv(e.to_string());
    let headers = r.headers().map_err(err)?;
    if headers != vec!["t", "x"] {
        return Err(AnalysisError::Csv(format!("unexpected header {headers:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(err)?;
            let num = |i: usize| {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| AnalysisError::Csv(format!("bad field {i} in {rec:?}")))
            };
            Ok((num(0)?, num(1)?))
        })
        .collect()
}
