//! Additive integer secret sharing among `h` computing servers.
//!
//! A secret vector is split into `h` integer share vectors that sum to it
//! exactly. The first `h-1` shares are drawn uniformly from the symmetric
//! interval `[-2^(ell+kappa), 2^(ell+kappa))` before the secret is read,
//! so they carry no information about it; the last share absorbs the
//! secret. An `ell`-bit secret is hidden with statistical error `2^-kappa`.
//!
//! Addition, truncation (round-half-up per share, reconstruction error at
//! most `h/2`), and reduction mod `2^a` are all local to one server.

use rand::Rng;
use thiserror::Error;

use crate::dp::round_div;
use crate::ring;

#[derive(Debug, Error, PartialEq)]
pub enum IssError {
    #[error("need at least 2 computing servers, got {0}")]
    TooFewServers(usize),
    #[error("kappa must be at least 40 bits, got {0}")]
    KappaTooSmall(u32),
    #[error("ell + kappa = {0} exceeds the 120-bit share budget")]
    ShareWidthOverflow(u32),
    #[error("secret at index {index} needs more than ell = {ell} bits")]
    SecretTooWide { index: usize, ell: u32 },
    #[error("share vectors have mismatched lengths")]
    LengthMismatch,
    #[error("expected shares from servers 0..{expected}, got server id {got}")]
    BadServerId { expected: usize, got: usize },
    #[error("duplicate or missing server ids in share set")]
    InconsistentServerSet,
    #[error("operands belong to different servers ({0} vs {1})")]
    ServerMismatch(usize, usize),
    #[error("inputs are not neighboring (|x - x_bar| > 1)")]
    NotNeighboring,
}

/// Sharing parameters: `h` computing servers, statistical security
/// `kappa`, plaintext bound `2^ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IssConfig {
    pub h: usize,
    pub kappa: u32,
    pub ell: u32,
}

impl IssConfig {
    pub fn new(h: usize, kappa: u32, ell: u32) -> Result<Self, IssError> {
        if h < 2 {
            return Err(IssError::TooFewServers(h));
        }
        if kappa < 40 {
            return Err(IssError::KappaTooSmall(kappa));
        }
        // the last share is bounded by h * 2^(ell+kappa); keep the sum of
        // h shares inside i128
        if ell + kappa > 120 {
            return Err(IssError::ShareWidthOverflow(ell + kappa));
        }
        Ok(Self { h, kappa, ell })
    }

    /// Half-width of the uniform share interval.
    fn bound(&self) -> i128 {
        1i128 << (self.ell + self.kappa)
    }
}

/// One server's additive shares of an integer vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntShareVec {
    pub server_id: usize,
    pub shares: Vec<i128>,
}

impl IntShareVec {
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// Wire form: each share as a 128-bit signed little-endian integer.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.shares.len() * 16);
        for s in &self.shares {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(server_id: usize, bytes: &[u8]) -> Result<Self, IssError> {
        if bytes.len() % 16 != 0 {
            return Err(IssError::LengthMismatch);
        }
        let shares = bytes
            .chunks_exact(16)
            .map(|c| i128::from_le_bytes(c.try_into().expect("chunk of 16")))
            .collect();
        Ok(Self { server_id, shares })
    }
}

/// One server's additive shares of a vector over `Z_{2^a}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingShareVec {
    pub server_id: usize,
    pub shares: Vec<u64>,
    pub ring_bits: u32,
}

impl RingShareVec {
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// Wire form: each share as a 64-bit unsigned little-endian integer.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.shares.len() * 8);
        for s in &self.shares {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }
}

/// Share a secret vector among `cfg.h` servers. Servers `0..h-1` receive
/// uniform shares drawn before the secret is read; server `h-1` receives
/// the difference.
pub fn share_int<R: Rng + ?Sized>(
    secret_vec: &[i128],
    cfg: &IssConfig,
    rng: &mut R,
) -> Result<Vec<IntShareVec>, IssError> {
    let limit = 1i128 << cfg.ell;
    let bound = cfg.bound();
    let mut out: Vec<IntShareVec> = (0..cfg.h)
        .map(|server_id| IntShareVec { server_id, shares: Vec::with_capacity(secret_vec.len()) })
        .collect();
    // uniform shares first, independent of the secret
    for _ in 0..secret_vec.len() {
        for sv in out.iter_mut().take(cfg.h - 1) {
            sv.shares.push(rng.random_range(-bound..bound));
        }
    }
    for (index, &secret) in secret_vec.iter().enumerate() {
        if secret.abs() >= limit {
            return Err(IssError::SecretTooWide { index, ell: cfg.ell });
        }
        let partial: i128 = (0..cfg.h - 1).map(|s| out[s].shares[index]).sum();
        out[cfg.h - 1].shares.push(secret - partial);
    }
    Ok(out)
}

/// Exact coordinate-wise sum of all `h` share vectors. Requires each
/// server id 0..h-1 exactly once and consistent lengths.
pub fn reconstruct_int(shares: &[IntShareVec]) -> Result<Vec<i128>, IssError> {
    let h = shares.len();
    if h < 2 {
        return Err(IssError::TooFewServers(h));
    }
    let mut seen = vec![false; h];
    let d = shares[0].len();
    for sv in shares {
        if sv.len() != d {
            return Err(IssError::LengthMismatch);
        }
        if sv.server_id >= h {
            return Err(IssError::BadServerId { expected: h, got: sv.server_id });
        }
        if seen[sv.server_id] {
            return Err(IssError::InconsistentServerSet);
        }
        seen[sv.server_id] = true;
    }
    let mut out = vec![0i128; d];
    for sv in shares {
        for (acc, &s) in out.iter_mut().zip(&sv.shares) {
            *acc += s;
        }
    }
    Ok(out)
}

/// Local share addition; reconstructs to the sum of the secrets.
pub fn add_shares(a: &IntShareVec, b: &IntShareVec) -> Result<IntShareVec, IssError> {
    if a.server_id != b.server_id {
        return Err(IssError::ServerMismatch(a.server_id, b.server_id));
    }
    if a.len() != b.len() {
        return Err(IssError::LengthMismatch);
    }
    let shares = a.shares.iter().zip(&b.shares).map(|(x, y)| x + y).collect();
    Ok(IntShareVec { server_id: a.server_id, shares })
}

/// Local truncation: each share becomes `round_div(share, 2^c)`. The
/// reconstruction differs from `x / 2^c` by at most `h/2`.
pub fn trunc_shares(x: &IntShareVec, c: u32) -> IntShareVec {
    let gamma = 1i128 << c;
    IntShareVec {
        server_id: x.server_id,
        shares: x.shares.iter().map(|&s| round_div(s, gamma)).collect(),
    }
}

/// Local reduction mod `2^a`; the ring reconstruction equals the secret
/// exactly when the secret lies in `[0, 2^a)`.
pub fn convert_to_ring(x: &IntShareVec, a: u32) -> RingShareVec {
    RingShareVec {
        server_id: x.server_id,
        shares: x.shares.iter().map(|&s| ring::from_i128(s, a)).collect(),
        ring_bits: a,
    }
}

/// Sum mod `2^a` of ring share vectors (test/oracle helper).
pub fn reconstruct_ring(shares: &[RingShareVec]) -> Result<Vec<u64>, IssError> {
    if shares.is_empty() {
        return Err(IssError::TooFewServers(0));
    }
    let a = shares[0].ring_bits;
    let d = shares[0].len();
    let mut out = vec![0u64; d];
    for sv in shares {
        if sv.len() != d || sv.ring_bits != a {
            return Err(IssError::LengthMismatch);
        }
        for (acc, &s) in out.iter_mut().zip(&sv.shares) {
            *acc = ring::add(*acc, s, a);
        }
    }
    Ok(out)
}

/// Witness for the sensitivity of share-wise rounding: the two rounded
/// reconstructions for neighboring secrets shared with identical
/// randomness (only the last share differs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundingWitness {
    pub rounded_x: i128,
    pub rounded_x_bar: i128,
}

impl RoundingWitness {
    pub fn difference(&self) -> i128 {
        self.rounded_x - self.rounded_x_bar
    }
}

/// Share `x + eta` and `x_bar + eta` with the same uniform draws, round
/// each share by `gamma`, and return both reconstructions. For
/// `|x - x_bar| <= 1` the two results differ by at most 1 because only the
/// last share changes, and by at most 1.
pub fn rounding_sensitivity_check<R: Rng + ?Sized>(
    x: i128,
    x_bar: i128,
    eta: i128,
    gamma: i128,
    cfg: &IssConfig,
    rng: &mut R,
) -> Result<RoundingWitness, IssError> {
    if (x - x_bar).abs() > 1 {
        return Err(IssError::NotNeighboring);
    }
    debug_assert!(gamma >= 1 && (gamma as u128).is_power_of_two());
    let bound = cfg.bound();
    let uniforms: Vec<i128> = (0..cfg.h - 1).map(|_| rng.random_range(-bound..bound)).collect();
    let partial: i128 = uniforms.iter().sum();

    let rounded = |secret: i128| -> i128 {
        let last = (secret + eta) - partial;
        uniforms.iter().map(|&s| round_div(s, gamma)).sum::<i128>() + round_div(last, gamma)
    };
    let witness = RoundingWitness { rounded_x: rounded(x), rounded_x_bar: rounded(x_bar) };
    debug_assert!(witness.difference().abs() <= 1);
    Ok(witness)
}
