//! Probabilistic model of the agreement process: exact one-step
//! statistics, the density drift polynomial, its ODE and hitting-time
//! bounds.

mod bounds;
mod exact;
mod ode;
mod poly;

pub use bounds::{hitting_time_bound, lower_bound_p, HittingBounds};
pub use exact::{
    expected_drift_double_sum, expected_drift_exact, expected_drift_with_threshold, hypergeom_flip_prob,
    signed_flip_identity,
};
pub use ode::{integrate_ode, ode_hitting_time, read_ode_csv, write_ode_csv, OdeSolution};
pub use poly::{lipschitz_estimate, lipschitz_estimate_on_grid, p_derivative, p_of_x};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameters: {0}")]
    Domain(String),
    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),
    #[error("step size must be positive and at most the horizon")]
    BadStep,
    #[error("h = {h} outside [1, 1/x0] for x0 = {x0}")]
    TargetOutOfRange { h: f64, x0: f64 },
    #[error("malformed trajectory CSV: {0}")]
    Csv(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::Domain(msg.into())
}

/// Sample size `k` and flip size `l`; the flip threshold is `ceil(k/2)`
/// disagreements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DriftModel {
    k: usize,
    l: usize,
}

impl DriftModel {
    pub fn new(k: usize, l: usize) -> Result<Self, AnalysisError> {
        if l == 0 || l > k {
            return Err(domain(format!("need 1 <= l <= k, got k={k} l={l}")));
        }
        Ok(Self { k, l })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn threshold(&self) -> usize {
        self.k.div_ceil(2)
    }
}
