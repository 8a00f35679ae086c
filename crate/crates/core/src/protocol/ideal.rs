//! The trusted-party specification the protocol must match: sum the
//! inputs, add one negative-binomial noise vector per server, truncate,
//! and release the lowest argmax index, leaking the noise contributed by
//! up to `t` (corrupted) servers.

use rand::Rng;

use crate::dp::{
    round_div, sample_negative_binomial, DpError, Histogram, NoiseOrigin, NoiseVector,
};
use crate::iss::{reconstruct_int, share_int, trunc_shares, IssConfig};

use super::streams::{party_rng, StreamParty, StreamPurpose};
use super::{ProtocolConfig, ProtocolError};

/// Noise the adversary is conceded: the corrupted servers' own vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageRecord {
    pub corrupted_ids: Vec<usize>,
    pub leaked_noise: Vec<NoiseVector>,
}

impl LeakageRecord {
    pub fn empty() -> Self {
        Self { corrupted_ids: Vec::new(), leaked_noise: Vec::new() }
    }
}

/// How the truncation by `2^c` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncRounding {
    /// One round-half-up of the aggregate (rounding error at most 1/2).
    Direct,
    /// The protocol's path: share the aggregate among `h` servers, round
    /// each share, and sum (error at most `h/2`).
    ShareWise,
}

/// Outcome of one oracle evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealOutcome {
    pub index: usize,
    pub leakage: LeakageRecord,
    /// Per-coordinate sums of the k noise vectors (diagnostics for error
    /// bound checks).
    pub total_noise: Vec<u64>,
    pub resampled_draws: u64,
}

/// One noise vector `NB^d(1/(k-t), p)` with draws at or above
/// `2^noise_cap_bits` redrawn (the event is counted, and made negligible
/// by the cap choice at default parameters).
pub(crate) fn capped_noise_vector<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<(Vec<u64>, u64), DpError> {
    if cfg.p >= 1.0 {
        // the geometric/NB family degenerates to the constant 0
        return Ok((vec![0; cfg.d], 0));
    }
    let cap = cfg.noise_cap();
    let share = cfg.nb_share();
    let mut resamples = 0u64;
    let mut values = Vec::with_capacity(cfg.d);
    for _ in 0..cfg.d {
        let mut tries = 0u32;
        let v = loop {
            let v = sample_negative_binomial(share, cfg.p, rng)?;
            if v < cap {
                break v;
            }
            resamples += 1;
            tries += 1;
            if tries > 10_000 {
                return Err(DpError::InvalidProbability(cfg.p));
            }
        };
        values.push(v);
    }
    Ok((values, resamples))
}

/// Run the ideal functionality on `n` binary vectors with a single
/// randomness stream: sample `r^(j)` for `j = 0..k` in server order, add
/// everything, truncate directly, and leak the first `t` noise vectors.
pub fn ideal_functionality<R: Rng + ?Sized>(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<IdealOutcome, ProtocolError> {
    let hist = Histogram::from_binary_vectors(inputs)?;
    ideal_functionality_hist(&hist, cfg, TruncRounding::Direct, rng)
}

/// Histogram-level oracle used by the benchmarks (the input expansion is
/// skipped; the distribution is identical).
pub fn ideal_functionality_hist<R: Rng + ?Sized>(
    hist: &Histogram,
    cfg: &ProtocolConfig,
    rounding: TruncRounding,
    rng: &mut R,
) -> Result<IdealOutcome, ProtocolError> {
    if hist.dims() != cfg.d {
        return Err(ProtocolError::Config(format!(
            "histogram has {} bins, config says {}",
            hist.dims(),
            cfg.d
        )));
    }
    let mut noise_vectors = Vec::with_capacity(cfg.k);
    let mut resampled = 0u64;
    for _ in 0..cfg.k {
        let (values, re) = capped_noise_vector(cfg, rng)?;
        resampled += re;
        noise_vectors.push(values);
    }

    let mut z = vec![0i128; cfg.d];
    let mut total_noise = vec![0u64; cfg.d];
    for (i, &x) in hist.counts().iter().enumerate() {
        z[i] = x as i128;
    }
    for nv in &noise_vectors {
        for (i, &v) in nv.iter().enumerate() {
            z[i] += v as i128;
            total_noise[i] += v;
        }
    }

    let w = truncate(&z, cfg, rounding, rng)?;
    let index = crate::dp::argmax_lowest(&w);

    let leakage = LeakageRecord {
        corrupted_ids: (0..cfg.t).collect(),
        leaked_noise: noise_vectors[..cfg.t]
            .iter()
            .map(|v| NoiseVector {
                values: v.clone(),
                origin: NoiseOrigin::NegativeBinomial { share: cfg.nb_share() },
            })
            .collect(),
    };
    Ok(IdealOutcome { index, leakage, total_noise, resampled_draws: resampled })
}

fn truncate<R: Rng + ?Sized>(
    z: &[i128],
    cfg: &ProtocolConfig,
    rounding: TruncRounding,
    rng: &mut R,
) -> Result<Vec<i128>, ProtocolError> {
    let gamma = 1i128 << cfg.c;
    match rounding {
        TruncRounding::Direct => Ok(z.iter().map(|&v| round_div(v, gamma)).collect()),
        TruncRounding::ShareWise => {
            let max_abs = z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            let ell = (128 - max_abs.leading_zeros() + 1).max(1);
            let iss = IssConfig::new(cfg.h, cfg.kappa, ell)?;
            let shares = share_int(z, &iss, rng)?;
            let truncated: Vec<_> = shares.iter().map(|s| trunc_shares(s, cfg.c)).collect();
            Ok(reconstruct_int(&truncated)?)
        }
    }
}

/// Oracle evaluation that consumes the same canonical per-party streams
/// as [`super::run_protocol`] under the same master seed, including the
/// share-wise rounding path, so the two outputs agree exactly.
///
/// `pinned_noise` overrides individual servers' noise-stream masters
/// (used to condition on a corrupted server's leaked noise).
pub fn ideal_functionality_seeded(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
    pinned_noise: &[(usize, u64)],
) -> Result<IdealOutcome, ProtocolError> {
    let hist = Histogram::from_binary_vectors(inputs)?;
    if hist.dims() != cfg.d || inputs.len() as u64 != cfg.n {
        return Err(ProtocolError::Config(format!(
            "inputs are {} vectors of d = {}, config says n = {}, d = {}",
            inputs.len(),
            hist.dims(),
            cfg.n,
            cfg.d
        )));
    }

    // client sharings, folded per computing server
    let client_iss = IssConfig::new(cfg.h, cfg.kappa, 1)?;
    let mut aggregates = vec![vec![0i128; cfg.d]; cfg.h];
    for (ci, vec) in inputs.iter().enumerate() {
        let secret: Vec<i128> = vec.iter().map(|&b| b as i128).collect();
        let mut rng = party_rng(master, StreamParty::Client(ci as u32), StreamPurpose::Share);
        let shares = share_int(&secret, &client_iss, &mut rng)?;
        for (agg, sv) in aggregates.iter_mut().zip(&shares) {
            for (acc, &s) in agg.iter_mut().zip(&sv.shares) {
                *acc += s;
            }
        }
    }

    // per-server noise from each server's own stream
    let noise_master = |server: usize| {
        pinned_noise
            .iter()
            .find(|(s, _)| *s == server)
            .map(|&(_, m)| m)
            .unwrap_or(master)
    };
    let mut noise_vectors = Vec::with_capacity(cfg.k);
    let mut resampled = 0u64;
    for server in 0..cfg.k {
        let mut rng = party_rng(
            noise_master(server),
            StreamParty::Server(server as u32),
            StreamPurpose::Noise,
        );
        let (values, re) = capped_noise_vector(cfg, &mut rng)?;
        resampled += re;
        noise_vectors.push(values);
    }

    // computing servers add their own noise in the clear
    for (server, agg) in aggregates.iter_mut().enumerate() {
        for (acc, &v) in agg.iter_mut().zip(&noise_vectors[server]) {
            *acc += v as i128;
        }
    }

    // supporting servers share theirs
    let noise_iss = IssConfig::new(cfg.h, cfg.kappa, cfg.noise_cap_bits.max(1))?;
    for server in cfg.h..cfg.k {
        let secret: Vec<i128> = noise_vectors[server].iter().map(|&v| v as i128).collect();
        let mut rng =
            party_rng(master, StreamParty::Server(server as u32), StreamPurpose::Share);
        let shares = share_int(&secret, &noise_iss, &mut rng)?;
        for (agg, sv) in aggregates.iter_mut().zip(&shares) {
            for (acc, &s) in agg.iter_mut().zip(&sv.shares) {
                *acc += s;
            }
        }
    }

    // share-wise truncation, then the plain integer argmax
    let gamma = 1i128 << cfg.c;
    let mut w = vec![0i128; cfg.d];
    for agg in &aggregates {
        for (acc, &s) in w.iter_mut().zip(agg) {
            *acc += round_div(s, gamma);
        }
    }
    let index = crate::dp::argmax_lowest(&w);

    let mut total_noise = vec![0u64; cfg.d];
    for nv in &noise_vectors {
        for (acc, &v) in total_noise.iter_mut().zip(nv) {
            *acc += v;
        }
    }
    let leakage = LeakageRecord {
        corrupted_ids: (0..cfg.t).collect(),
        leaked_noise: noise_vectors[..cfg.t]
            .iter()
            .map(|v| NoiseVector {
                values: v.clone(),
                origin: NoiseOrigin::NegativeBinomial { share: cfg.nb_share() },
            })
            .collect(),
    };
    Ok(IdealOutcome { index, leakage, total_noise, resampled_draws: resampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn one_hot(d: usize, i: usize) -> Vec<u8> {
        let mut v = vec![0u8; d];
        v[i] = 1;
        v
    }

    #[test]
    fn single_bin_returns_zero() {
        let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, 1, 2, 0, 0).unwrap();
        let inputs = vec![one_hot(1, 0), one_hot(1, 0)];
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let out = ideal_functionality(&inputs, &cfg, &mut rng).unwrap();
        assert_eq!(out.index, 0);
        assert_eq!(out.leakage.corrupted_ids, vec![0]);
    }

    #[test]
    fn rejects_non_binary_inputs() {
        let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, 2, 1, 0, 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(ideal_functionality(&[vec![0, 2]], &cfg, &mut rng).is_err());
    }

    #[test]
    fn noiseless_limit_matches_plaintext_argmax() {
        // epsilon huge -> p ~ 1 -> noise 0 with overwhelming probability
        let d = 6;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        use rand::Rng;
        for trial in 0..1000u64 {
            let inputs: Vec<Vec<u8>> =
                (0..5).map(|_| one_hot(d, rng.random_range(0..d))).collect();
            let hist = Histogram::from_binary_vectors(&inputs).unwrap();
            let cfg = ProtocolConfig::derive(80.0, 0, 3, 1, 40, d, 5, 0, 0).unwrap();
            let mut run_rng = ChaCha20Rng::seed_from_u64(trial);
            let out = ideal_functionality(&inputs, &cfg, &mut run_rng).unwrap();
            assert_eq!(out.index, hist.argmax(), "trial {trial}");
        }
    }

    #[test]
    fn sharewise_rounding_stays_within_half_h() {
        let cfg = ProtocolConfig::derive(1.0, 3, 3, 1, 40, 4, 50, 0, 0).unwrap();
        let z = vec![40i128, 17, 0, 333];
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = truncate(&z, &cfg, TruncRounding::ShareWise, &mut rng).unwrap();
            for (i, &v) in w.iter().enumerate() {
                let exact = z[i] as f64 / 8.0;
                assert!((v as f64 - exact).abs() <= cfg.h as f64 / 2.0);
            }
        }
    }
}
