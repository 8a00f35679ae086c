//! The central-model selection mechanism and the baseline mechanisms it is
//! benchmarked against.
//!
//! All mechanisms release an index plus its additive error against the
//! un-noised histogram, and break ties towards the lowest index.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::sampling::{geometric_unchecked, DiscreteLaplace};
use super::{
    argmax_lowest, round_div, DpError, DpParams, Histogram, NoiseOrigin, NoiseVector,
    SelectionResult,
};

/// Noisy argmax with one-sided geometric noise and rounded scores:
/// draws `eta ~ Geometric(p)^d`, computes `w_i = round_div(x_i + eta_i, gamma)`,
/// and returns the smallest index attaining the maximum.
pub fn central_noisy_argmax<R: Rng + ?Sized>(
    hist: &Histogram,
    params: &DpParams,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    central_noisy_argmax_with_noise(hist, params, rng).map(|(r, _)| r)
}

/// Same as [`central_noisy_argmax`] but also returns the drawn noise, for
/// per-run error-bound checks.
pub fn central_noisy_argmax_with_noise<R: Rng + ?Sized>(
    hist: &Histogram,
    params: &DpParams,
    rng: &mut R,
) -> Result<(SelectionResult, NoiseVector), DpError> {
    if !(params.p > 0.0 && params.p <= 1.0) {
        return Err(DpError::InvalidProbability(params.p));
    }
    let gamma = params.gamma as i128;
    let mut noise = Vec::with_capacity(hist.dims());
    let mut scores = Vec::with_capacity(hist.dims());
    for &x in hist.counts() {
        let eta = geometric_unchecked(params.p, rng);
        noise.push(eta);
        scores.push(round_div(x as i128 + eta as i128, gamma));
    }
    let index = argmax_lowest(&scores);
    Ok((
        SelectionResult::evaluate(hist, index),
        NoiseVector { values: noise, origin: NoiseOrigin::Geometric },
    ))
}

/// Permute-and-flip over quality scores `q_i = x_i` with sensitivity 1:
/// visit candidates in a uniformly random order and accept candidate `i`
/// with probability `exp(eps (q_i - q*) / 2)`; the maximum is accepted
/// with probability 1, so the loop always terminates.
pub fn baseline_permute_and_flip<R: Rng + ?Sized>(
    hist: &Histogram,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    if !(epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    let q_star = hist.max_count();
    let mut order: Vec<usize> = (0..hist.dims()).collect();
    order.shuffle(rng);
    for &i in &order {
        let gap = (hist.counts()[i] as f64) - (q_star as f64);
        let accept = (epsilon * gap / 2.0).exp();
        if rng.random::<f64>() < accept {
            return Ok(SelectionResult::evaluate(hist, i));
        }
    }
    unreachable!("a maximal candidate accepts with probability 1");
}

/// Exponential mechanism: samples index `i` with probability proportional
/// to `exp(eps x_i / 2)`.
pub fn baseline_exponential_mechanism<R: Rng + ?Sized>(
    hist: &Histogram,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    if !(epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    let max = hist.max_count() as f64;
    // shift by the max so weights stay in (0, 1]
    let weights: Vec<f64> = hist
        .counts()
        .iter()
        .map(|&x| (epsilon * (x as f64 - max) / 2.0).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return Ok(SelectionResult::evaluate(hist, i));
        }
    }
    Ok(SelectionResult::evaluate(hist, hist.dims() - 1))
}

/// Bitwise randomized response over the owners' binary vectors with the
/// budget split evenly per bit (`eps_bit = eps / d`, flip probability
/// `1/(1 + e^(eps_bit))`), followed by the standard unbiased debiasing and
/// an argmax over the debiased sums.
///
/// The perturbed count of coordinate `i` is the sum of `n` independent
/// Bernoullis, so it is drawn as
/// `Binomial(x_i, 1-q) + Binomial(n - x_i, q)` instead of flipping each
/// owner's bit separately.
pub fn baseline_randomized_response<R: Rng + ?Sized>(
    input_vectors: &[Vec<u8>],
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    let hist = Histogram::from_binary_vectors(input_vectors)?;
    baseline_randomized_response_hist(&hist, input_vectors.len() as u64, epsilon, rng)
}

/// Aggregated form of [`baseline_randomized_response`] operating on the
/// summed histogram of `n` owners directly.
pub fn baseline_randomized_response_hist<R: Rng + ?Sized>(
    hist: &Histogram,
    n: u64,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    if !(epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    let d = hist.dims();
    let eps_bit = epsilon / d as f64;
    let q = 1.0 / (1.0 + eps_bit.exp());

    let mut debiased = vec![0f64; d];
    for (i, &x) in hist.counts().iter().enumerate() {
        let kept = Binomial::new(x, 1.0 - q).expect("valid binomial").sample(rng);
        let flipped_in = Binomial::new(n - x, q).expect("valid binomial").sample(rng);
        let perturbed = (kept + flipped_in) as f64;
        // E[perturbed] = x(1-q) + (n-x)q, solve for x
        debiased[i] = (perturbed - n as f64 * q) / (1.0 - 2.0 * q);
    }

    let mut best = 0;
    for i in 1..d {
        if debiased[i] > debiased[best] {
            best = i;
        }
    }
    Ok(SelectionResult::evaluate(hist, best))
}

/// Secure-aggregation baseline: releases the histogram plus independent
/// two-sided symmetric geometric (discrete Laplace) noise at scale
/// `2/eps` per coordinate (sensitivity 2 for one-hot contributions in the
/// bounded setting), then takes the argmax of the noisy sum.
pub fn baseline_secure_aggregation<R: Rng + ?Sized>(
    hist: &Histogram,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionResult, DpError> {
    if !(epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    let noise = DiscreteLaplace::new(2.0 / epsilon)?;
    let scores: Vec<i128> = hist
        .counts()
        .iter()
        .map(|&x| x as i128 + noise.sample(rng) as i128)
        .collect();
    Ok(SelectionResult::evaluate(hist, argmax_lowest(&scores)))
}

/// Worst-case baseline: report a uniformly random index.
pub fn baseline_uniform_random<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Result<usize, DpError> {
    if d == 0 {
        return Err(DpError::EmptyHistogram);
    }
    Ok(rng.random_range(0..d))
}
