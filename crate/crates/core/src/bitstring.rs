//! Packed bit strings and position sets.
//!
//! Index 0 is the leftmost character of the textual form.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::randomness::LocalRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("position {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("position set over universe {universe} applied to string of length {len}")]
    UniverseMismatch { universe: usize, len: usize },
    #[error("bit strings must be non-empty")]
    Empty,
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
    #[error("position indices must be strictly increasing")]
    NotIncreasing,
    #[error("agreement count {count} exceeds length {len}")]
    AgreementOutOfRange { count: usize, len: usize },
}

const WORD: usize = 64;

/// A non-empty string of bits, stored 64 to a word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Result<Self, BitError> {
        if len == 0 {
            return Err(BitError::Empty);
        }
        Ok(Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, BitError> {
        let mut out = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        Ok(out)
    }

    pub fn random(len: usize, rng: &mut LocalRng) -> Result<Self, BitError> {
        let mut out = Self::zeros(len)?;
        for w in out.words.iter_mut() {
            *w = rng.random();
        }
        out.mask_tail();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; present for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| (self.words[index / WORD] >> (index % WORD)) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.words[i / WORD] >> (i % WORD)) & 1 == 1)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.iter().collect()
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    fn check_same_len(&self, other: &Self) -> Result<(), BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    fn check_set(&self, set: &PositionSet) -> Result<(), BitError> {
        if set.universe != self.len {
            return Err(BitError::UniverseMismatch {
                universe: set.universe,
                len: self.len,
            });
        }
        Ok(())
    }

    /// Number of positions where the strings differ.
    pub fn hamming_distance(&self, other: &Self) -> Result<usize, BitError> {
        self.check_same_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Number of positions where the strings hold the same bit.
    pub fn agreement_count(&self, other: &Self) -> Result<usize, BitError> {
        Ok(self.len - self.hamming_distance(other)?)
    }

    /// The substring at the set's positions, in increasing index order.
    pub fn restrict(&self, set: &PositionSet) -> Result<BitString, BitError> {
        self.check_set(set)?;
        if set.is_empty() {
            return Err(BitError::Empty);
        }
        let bits: Vec<bool> = set
            .iter()
            .map(|i| self.get(i).expect("index validated by PositionSet"))
            .collect();
        Self::from_bits(&bits)
    }

    /// A copy with every bit in `set` inverted.
    pub fn flip_positions(&self, set: &PositionSet) -> Result<BitString, BitError> {
        self.check_set(set)?;
        let mut out = self.clone();
        for i in set.iter() {
            out.words[i / WORD] ^= 1 << (i % WORD);
        }
        Ok(out)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = BitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitError::InvalidChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(&bits)
    }
}

/// A strictly increasing set of positions inside `[0, universe)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionSet {
    indices: Vec<usize>,
    universe: usize,
}

impl PositionSet {
    /// Builds a set from strictly increasing indices.
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self, BitError> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BitError::NotIncreasing);
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(BitError::IndexOutOfRange {
                    index: last,
                    len: universe,
                });
            }
        }
        Ok(Self { indices, universe })
    }

    /// Builds a set from indices in any order; duplicates are rejected.
    pub fn from_unsorted(mut indices: Vec<usize>, universe: usize) -> Result<Self, BitError> {
        indices.sort_unstable();
        Self::new(indices, universe)
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            indices: Vec::new(),
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &PositionSet) -> bool {
        self.universe == other.universe && self.iter().all(|i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &PositionSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }
}

/// Free-function form of [`BitString::agreement_count`].
pub fn agreement_count(a: &BitString, b: &BitString) -> Result<usize, BitError> {
    a.agreement_count(b)
}

pub fn restrict(a: &BitString, s: &PositionSet) -> Result<BitString, BitError> {
    a.restrict(s)
}

pub fn flip_positions(a: &BitString, s: &PositionSet) -> Result<BitString, BitError> {
    a.flip_positions(s)
}

/// Two random `n`-bit strings that agree at exactly `agreements` uniformly
/// chosen positions.
pub fn make_pair_with_agreement(
    n: usize,
    agreements: usize,
    rng: &mut LocalRng,
) -> Result<(BitString, BitString), BitError> {
    if agreements > n {
        return Err(BitError::AgreementOutOfRange {
            count: agreements,
            len: n,
        });
    }
    let a = BitString::random(n, rng)?;
    // positions [0, n - agreements) of the permutation become disagreements
    let mut perm: Vec<usize> = (0..n).collect();
    let differ = n - agreements;
    for i in 0..differ {
        let j = rng.random_range(i..n);
        perm.swap(i, j);
    }
    let flips = PositionSet::from_unsorted(perm[..differ].to_vec(), n)?;
    let b = a.flip_positions(&flips)?;
    Ok((a, b))
}
