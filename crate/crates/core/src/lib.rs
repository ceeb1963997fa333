//! Two-party bit-string agreement without key predistribution.
//!
//! Two parties start from dissimilar `n`-bit strings. In every step they
//! derive the same random `k` positions from a shared seed, securely test
//! whether they disagree on at least half of them, and if so the party
//! whose turn it is flips `l` of those positions at random. The agreement
//! count drifts upward; [`analysis`] holds the exact drift, the density
//! ODE and its hitting-time bounds.
//!
//! Modules:
//!
//! * [`bitstring`]: packed strings, agreement counting, flipping.
//! * [`randomness`]: shared seed-derived samples and private generators.
//! * [`circuit`]: Boolean circuits for the agreement count and threshold.
//! * [`channel`]: framed messages, in-memory and threaded transports.
//! * [`mpc`]: semi-honest GMW evaluation with dealer-provided triples.
//! * [`protocol`]: the session engine, traces and Monte Carlo harness.
//! * [`analysis`]: drift formulas, RK4 integration, bounds.
//!
//! Analysis routines are generic over the scalar: [`scalar::Scalar`] for
//! closed-form probabilities (exact via [`Rational`]), [`scalar::Real`]
//! for the continuous model.

pub mod analysis;
pub mod bitstring;
pub mod channel;
pub mod circuit;
pub mod mpc;
pub mod protocol;
pub mod randomness;
pub mod scalar;

pub use analysis::{DriftModel, OdeSolution};
pub use bitstring::{BitString, PositionSet};
pub use circuit::Circuit;
pub use protocol::{Mode, ProtocolParams, TraceRecord};
pub use randomness::{LocalRng, SharedSeed};

/// Exact rational scalar for the closed-form probabilities.
pub type Rational = num_rational::BigRational;

pub type OdeSolution64 = OdeSolution<f64>;
pub type OdeSolution32 = OdeSolution<f32>;

pub type HittingBounds64 = analysis::HittingBounds<f64>;
