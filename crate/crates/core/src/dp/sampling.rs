//! Discrete noise samplers.
//!
//! Conventions: `Geometric(p)` counts failures before the first success,
//! `P[X = x] = p(1-p)^x` for `x = 0, 1, 2, ...`. The negative binomial
//! `NB(r, p)` is parameterized so that the sum of `m` independent
//! `NB(1/m, p)` samples is `Geometric(p)`-distributed, which is what makes
//! distributed noise generation work.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::DpError;

/// Sample `Geometric(p)` by inversion: `floor(ln(U) / ln(1-p))` for
/// uniform `U` in (0, 1].
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64, DpError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DpError::InvalidProbability(p));
    }
    Ok(geometric_unchecked(p, rng))
}

#[inline]
pub(crate) fn geometric_unchecked<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p == 1.0 {
        return 0;
    }
    // ln(1-u) via ln_1p keeps precision for u near 0; u in [0,1) keeps the
    // argument in (0,1] so the quotient is finite and nonnegative.
    let u: f64 = rng.random();
    let x = (-u).ln_1p() / (-p).ln_1p();
    x as u64
}

/// Sample `NB(r_param, p)` via the gamma-Poisson mixture
/// (`G ~ Gamma(shape = r_param, scale = (1-p)/p)`, then `Poisson(G)`),
/// which supports fractional `r_param`.
pub fn sample_negative_binomial<R: Rng + ?Sized>(
    r_param: f64,
    p: f64,
    rng: &mut R,
) -> Result<u64, DpError> {
    if !(r_param > 0.0) {
        return Err(DpError::InvalidShape(r_param));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(DpError::InvalidProbability(p));
    }
    let scale = (1.0 - p) / p;
    let gamma = Gamma::new(r_param, scale).map_err(|_| DpError::InvalidShape(r_param))?;
    let g: f64 = gamma.sample(rng);
    if g <= 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(g).map_err(|_| DpError::InvalidShape(r_param))?;
    Ok(poisson.sample(rng) as u64)
}

/// Two-sided symmetric geometric noise (discrete Laplace),
/// `P[X = x]` proportional to `exp(-|x|/scale)`.
///
/// Sampled as the difference of two independent geometrics with success
/// probability `1 - e^(-1/scale)`.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteLaplace {
    p: f64,
}

impl DiscreteLaplace {
    pub fn new(scale: f64) -> Result<Self, DpError> {
        if !(scale > 0.0) {
            return Err(DpError::InvalidProbability(scale));
        }
        Ok(Self { p: -((-1.0 / scale).exp_m1()) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let a = geometric_unchecked(self.p, rng) as i64;
        let b = geometric_unchecked(self.p, rng) as i64;
        a - b
    }
}

/// Convenience wrapper: sample one discrete-Laplace value at the given scale.
pub fn sample_discrete_laplace<R: Rng + ?Sized>(
    scale: f64,
    rng: &mut R,
) -> Result<i64, DpError> {
    Ok(DiscreteLaplace::new(scale)?.sample(rng))
}
