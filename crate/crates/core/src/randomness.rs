//! Shared (seed-derived) and private (per-party) randomness.
//!
//! The shared generator is counter based: word `idx` of round `step` under
//! seed `s` is
//!
//! ```text
//! key  = mix64(s + (step + 1) * GOLDEN)
//! word = mix64(key + (idx + 1) * GOLDEN)
//! ```
//!
//! with wrapping arithmetic, `GOLDEN = 0x9E3779B97F4A7C15` and `mix64` the
//! SplitMix64 finalizer (`xor-shift 30, * 0xBF58476D1CE4E5B9, xor-shift 27,
//! * 0x94D049BB133111EB, xor-shift 31`). Bounded draws use Lemire's
//! multiply-shift with rejection; every attempt consumes one word. A
//! `k`-subset is a partial Fisher-Yates shuffle of `[0, n)` (draw `i`
//! picks `i + below(n - i)`), sorted ascending.
//!
//! None of this is cryptographically strong. The seed is assumed to be
//! shared out of band.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::bitstring::PositionSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RandError {
    #[error("cannot draw {k} positions from {n}")]
    SubsetTooLarge { k: usize, n: usize },
    #[error("invalid seed {0:?}: expected decimal or 0x-prefixed hex u64")]
    BadSeed(String),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent-looking 64-bit value from a base and a label.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    mix64(mix64(base ^ 0x6A09_E667_F3BC_C909).wrapping_add(label.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// The seed both parties hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SharedSeed {
    pub value: u64,
    pub round_counter: u64,
}

impl SharedSeed {
    pub fn new(value: u64) -> Self {
        Self {
            value,
            round_counter: 0,
        }
    }

    /// Stream of words for one round.
    pub fn stream(&self, step: u64) -> SharedStream {
        SharedStream::new(self.value, step)
    }

    /// Advances the round counter and returns the round it now names.
    pub fn next_round(&mut self) -> u64 {
        self.round_counter += 1;
        self.round_counter
    }
}

impl FromStr for SharedSeed {
    type Err = RandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_seed(s).map(Self::new)
    }
}

impl fmt::Display for SharedSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.value)
    }
}

/// Parses a decimal or `0x`-prefixed hexadecimal 64-bit seed.
pub fn parse_seed(s: &str) -> Result<u64, RandError> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|_| RandError::BadSeed(s.to_string()))
}

/// The word sequence of one (seed, step) pair.
#[derive(Debug, Clone)]
pub struct SharedStream {
    key: u64,
    index: u64,
}

impl SharedStream {
    pub fn new(seed: u64, step: u64) -> Self {
        Self {
            key: mix64(seed.wrapping_add(step.wrapping_add(1).wrapping_mul(GOLDEN))),
            index: 0,
        }
    }

    pub fn next_word(&mut self) -> u64 {
        self.index += 1;
        mix64(self.key.wrapping_add(self.index.wrapping_mul(GOLDEN)))
    }

    /// Uniform value in `[0, bound)`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_word() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// Sparse or dense virtual array `0..n` for partial Fisher-Yates.
enum VirtualPerm {
    Dense(Vec<usize>),
    Sparse(HashMap<usize, usize>),
}

impl VirtualPerm {
    fn new(n: usize, k: usize) -> Self {
        if n <= 4096 || k.saturating_mul(8) > n {
            VirtualPerm::Dense((0..n).collect())
        } else {
            VirtualPerm::Sparse(HashMap::with_capacity(2 * k))
        }
    }

    fn get(&self, i: usize) -> usize {
        match self {
            VirtualPerm::Dense(v) => v[i],
            VirtualPerm::Sparse(m) => m.get(&i).copied().unwrap_or(i),
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        match self {
            VirtualPerm::Dense(v) => v.swap(i, j),
            VirtualPerm::Sparse(m) => {
                let (vi, vj) = (m.get(&i).copied().unwrap_or(i), m.get(&j).copied().unwrap_or(j));
                m.insert(i, vj);
                m.insert(j, vi);
            }
        }
    }
}

fn partial_fisher_yates(
    n: usize,
    k: usize,
    mut below: impl FnMut(usize) -> usize,
    perm: &mut VirtualPerm,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = i + below(n - i);
        perm.swap(i, j);
        out.push(perm.get(i));
    }
    out.sort_unstable();
    out
}

/// The round-`step` shared sample of `k` positions out of `n`.
///
/// Pure in its arguments: both parties call it independently and obtain the
/// same set.
pub fn joint_rand(seed: &SharedSeed, step: u64, k: usize, n: usize) -> Result<PositionSet, RandError> {
    if k > n {
        return Err(RandError::SubsetTooLarge { k, n });
    }
    let mut stream = seed.stream(step);
    let mut perm = VirtualPerm::new(n, k);
    let idx = partial_fisher_yates(n, k, |m| stream.below(m as u64) as usize, &mut perm);
    Ok(PositionSet::new(idx, n).expect("distinct sorted indices below n"))
}

/// A party's private generator.
#[derive(Debug, Clone)]
pub struct LocalRng(ChaCha12Rng);

impl LocalRng {
    pub fn seeded(seed: u64) -> Self {
        Self(ChaCha12Rng::seed_from_u64(seed))
    }

    pub fn from_entropy() -> Self {
        Self(ChaCha12Rng::from_os_rng())
    }

    /// A new generator seeded from this one's next output.
    pub fn fork(&mut self) -> Self {
        Self::seeded(self.0.next_u64())
    }
}

impl RngCore for LocalRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Uniform `l`-subset of `s` drawn from private randomness.
pub fn rand_subset(rng: &mut LocalRng, l: usize, s: &PositionSet) -> Result<PositionSet, RandError> {
    if l > s.len() {
        return Err(RandError::SubsetTooLarge { k: l, n: s.len() });
    }
    let mut perm = VirtualPerm::Dense((0..s.len()).collect());
    let picks = partial_fisher_yates(s.len(), l, |m| rng.random_range(0..m), &mut perm);
    let idx = picks.into_iter().map(|p| s.indices()[p]).collect();
    Ok(PositionSet::new(idx, s.universe()).expect("subset of a valid set"))
}

pub fn random_bits(rng: &mut LocalRng, count: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = rng.next_u64();
        let take = (count - out.len()).min(64);
        out.extend((0..take).map(|i| (w >> i) & 1 == 1));
    }
    out
}
