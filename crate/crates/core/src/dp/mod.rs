//! Plaintext statistical machinery: noise samplers, the central-model
//! selection mechanism, rounding, and the baseline mechanisms used in the
//! utility benchmarks.
//!
//! Everything here is pure given its `rng` argument; protocol code and
//! tests inject seeded streams to get reproducible runs.

mod mechanisms;
mod sampling;

pub use mechanisms::{
    baseline_exponential_mechanism, baseline_permute_and_flip, baseline_randomized_response,
    baseline_randomized_response_hist, baseline_secure_aggregation, baseline_uniform_random,
    central_noisy_argmax, central_noisy_argmax_with_noise,
};
pub use sampling::{
    sample_discrete_laplace, sample_geometric, sample_negative_binomial, DiscreteLaplace,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DpError {
    #[error("probability parameter {0} outside the valid range")]
    InvalidProbability(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("negative binomial shape must be positive, got {0}")]
    InvalidShape(f64),
    #[error("histogram must have at least one bin")]
    EmptyHistogram,
    #[error("histogram entry {value} at index {index} exceeds the weight bound {bound}")]
    CountExceedsBound { index: usize, value: u64, bound: u64 },
    #[error("no input vectors supplied")]
    NoInputs,
    #[error("input vector {vector} has non-binary entry at index {index}")]
    NonBinaryEntry { vector: usize, index: usize },
    #[error("input vector {vector} has length {got}, expected {expected}")]
    DimensionMismatch { vector: usize, got: usize, expected: usize },
}

/// Aggregated nonnegative counts per index: the plaintext sum of the data
/// owners' binary vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    n: u64,
}

impl Histogram {
    /// Build a histogram with an explicit total-weight bound `n`.
    /// Every entry must be at most `n`.
    pub fn new(counts: Vec<u64>, n: u64) -> Result<Self, DpError> {
        if counts.is_empty() {
            return Err(DpError::EmptyHistogram);
        }
        for (index, &value) in counts.iter().enumerate() {
            if value > n {
                return Err(DpError::CountExceedsBound { index, value, bound: n });
            }
        }
        Ok(Self { counts, n })
    }

    /// Build a histogram whose weight bound is the total count, i.e. each
    /// contributor submitted one one-hot vector.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self, DpError> {
        let n = counts.iter().sum();
        Self::new(counts, n)
    }

    /// Sum the given binary vectors into a histogram. Rejects non-binary
    /// entries and inconsistent dimensions.
    pub fn from_binary_vectors(vectors: &[Vec<u8>]) -> Result<Self, DpError> {
        let d = match vectors.first() {
            Some(v) => v.len(),
            None => return Err(DpError::NoInputs),
        };
        if d == 0 {
            return Err(DpError::EmptyHistogram);
        }
        let mut counts = vec![0u64; d];
        for (vi, vec) in vectors.iter().enumerate() {
            if vec.len() != d {
                return Err(DpError::DimensionMismatch { vector: vi, got: vec.len(), expected: d });
            }
            for (i, &bit) in vec.iter().enumerate() {
                if bit > 1 {
                    return Err(DpError::NonBinaryEntry { vector: vi, index: i });
                }
                counts[i] += u64::from(bit);
            }
        }
        Ok(Self { n: vectors.len() as u64, counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }

    /// Total weight bound (number of contributing input vectors).
    pub fn weight_bound(&self) -> u64 {
        self.n
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Lowest index attaining the maximum count.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.counts.iter().enumerate() {
            if v > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

/// Parameters of the noisy-argmax mechanism.
///
/// `p` is the geometric success probability, `gamma = 2^c` the rounding
/// divisor, and `delta_round` the worst-case distance between the rounded
/// and exact quotient for the rounding rule in use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpParams {
    pub epsilon: f64,
    pub p: f64,
    pub gamma: u64,
    pub delta_round: f64,
    pub c: u32,
}

impl DpParams {
    /// Derive parameters from a privacy budget: `p = 1 - e^(-epsilon/2)`,
    /// `gamma = 2^c`. `delta_round` is 1/2 for the deterministic
    /// round-half-up used throughout.
    pub fn from_epsilon(epsilon: f64, c: u32) -> Result<Self, DpError> {
        if !(epsilon > 0.0) {
            return Err(DpError::InvalidEpsilon(epsilon));
        }
        let p = -((-epsilon / 2.0).exp_m1());
        Ok(Self { epsilon, p, gamma: 1u64 << c, delta_round: 0.5, c })
    }
}

/// Origin of a drawn noise vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseOrigin {
    Geometric,
    NegativeBinomial { share: f64 },
}

/// A vector of one-sided (nonnegative) noise values.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector {
    pub values: Vec<u64>,
    pub origin: NoiseOrigin,
}

impl NoiseVector {
    pub fn linf(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// Outcome of a selection mechanism: the released index and its additive
/// error against the un-noised histogram (0 iff a true argmax was chosen).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionResult {
    pub index: usize,
    pub error: u64,
}

impl SelectionResult {
    /// Score the released `index` against the plaintext histogram.
    pub fn evaluate(hist: &Histogram, index: usize) -> Self {
        let error = hist.max_count() - hist.counts()[index];
        Self { index, error }
    }
}

/// Deterministic round-half-up division by a power of two:
/// `floor(value/gamma + 1/2)` computed exactly in integer arithmetic.
///
/// Monotone non-decreasing in `value`, and the result is within 1/2 of the
/// exact quotient.
#[inline]
pub fn round_div(value: i128, gamma: i128) -> i128 {
    debug_assert!(gamma >= 1 && (gamma as u128).is_power_of_two());
    (value + gamma / 2).div_euclid(gamma)
}

/// Lowest index attaining the maximum of `values`.
pub fn argmax_lowest(values: &[i128]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
