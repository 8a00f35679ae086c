//! Protocol parameters: the public session parameters, their derivation
//! rules, and the flat `key=value` config-file format.

use crate::ring;

use super::ProtocolError;

/// Session parameters as they appear in a config file. `ring_bits = 0`
/// and `noise_cap_bits = 0` mean "derive from the other parameters".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionParams {
    pub epsilon: f64,
    pub trunc_bits: u32,
    pub servers: usize,
    pub corrupt: usize,
    pub kappa: u32,
    pub dims: usize,
    pub ring_bits: u32,
    pub noise_cap_bits: u32,
    pub seed: u64,
}

impl Default for SessionParams {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            trunc_bits: 0,
            servers: 3,
            corrupt: 1,
            kappa: 40,
            dims: 0,
            ring_bits: 0,
            noise_cap_bits: 0,
            seed: 0,
        }
    }
}

impl SessionParams {
    /// Parse the flat config format: one `key=value` per line, `#` for
    /// comments. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut params = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ProtocolError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                ProtocolError::Config(format!("line {}: bad {what} value `{value}`", lineno + 1))
            };
            match key {
                "epsilon" => params.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
                "trunc_bits" => params.trunc_bits = value.parse().map_err(|_| bad("trunc_bits"))?,
                "servers" => params.servers = value.parse().map_err(|_| bad("servers"))?,
                "corrupt" => params.corrupt = value.parse().map_err(|_| bad("corrupt"))?,
                "kappa" => params.kappa = value.parse().map_err(|_| bad("kappa"))?,
                "dims" => params.dims = value.parse().map_err(|_| bad("dims"))?,
                "ring_bits" => params.ring_bits = value.parse().map_err(|_| bad("ring_bits"))?,
                "noise_cap_bits" => {
                    params.noise_cap_bits = value.parse().map_err(|_| bad("noise_cap_bits"))?
                }
                "seed" => params.seed = value.parse().map_err(|_| bad("seed"))?,
                other => {
                    return Err(ProtocolError::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(params)
    }

    /// Resolve into a full configuration for `n` contributing vectors of
    /// dimension `d`.
    pub fn to_config(&self, d: usize, n: u64) -> Result<ProtocolConfig, ProtocolError> {
        if self.dims != 0 && self.dims != d {
            return Err(ProtocolError::Config(format!(
                "config dims = {} but the data has d = {d}",
                self.dims
            )));
        }
        ProtocolConfig::derive(
            self.epsilon,
            self.trunc_bits,
            self.servers,
            self.corrupt,
            self.kappa,
            d,
            n,
            self.ring_bits,
            self.noise_cap_bits,
        )
    }
}

/// Role of a server: the first `h = t+1` servers run the argmax, the
/// remaining `t` only contribute noise and preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServerRole {
    Computing(usize),
    Supporting(usize),
}

/// All public parameters of one protocol session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub epsilon: f64,
    /// Geometric noise parameter, `1 - e^(-epsilon/2)`.
    pub p: f64,
    /// Bits truncated from each share before the argmax.
    pub c: u32,
    pub k: usize,
    pub t: usize,
    /// Computing servers, `k - t = t + 1`.
    pub h: usize,
    pub kappa: u32,
    pub d: usize,
    pub n: u64,
    /// Ring width for the converted shares.
    pub a: u32,
    /// Per-coordinate noise draws are resampled above `2^noise_cap_bits - 1`.
    pub noise_cap_bits: u32,
}

fn bitlen(x: u128) -> u32 {
    128 - x.leading_zeros()
}

impl ProtocolConfig {
    /// Validate and derive a configuration.
    ///
    /// `ring_bits = 0` picks the smallest `a` such that the truncated
    /// aggregate plus the positivity offset fits `[0, 2^(a-1))`, keeping
    /// one headroom bit for the comparison protocol. `noise_cap_bits = 0`
    /// defaults to `2 + ceil(log2 n)`.
    #[allow(clippy::too_many_arguments)]
    pub fn derive(
        epsilon: f64,
        c: u32,
        k: usize,
        t: usize,
        kappa: u32,
        d: usize,
        n: u64,
        ring_bits: u32,
        noise_cap_bits: u32,
    ) -> Result<Self, ProtocolError> {
        if !(epsilon > 0.0) {
            return Err(ProtocolError::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if t < 1 || k != 2 * t + 1 {
            return Err(ProtocolError::Config(format!(
                "need k = 2t+1 with t >= 1, got k = {k}, t = {t}"
            )));
        }
        if d < 1 {
            return Err(ProtocolError::Config("dimension must be at least 1".into()));
        }
        if n < 1 {
            return Err(ProtocolError::Config("need at least one input vector".into()));
        }
        if kappa < 40 {
            return Err(ProtocolError::Config(format!("kappa must be at least 40, got {kappa}")));
        }
        let h = t + 1;
        let p = -((-epsilon / 2.0).exp_m1());

        let ncb = if noise_cap_bits == 0 { 2 + bitlen(n as u128) } else { noise_cap_bits };
        if ncb > 62 {
            return Err(ProtocolError::Config(format!("noise cap of {ncb} bits is too wide")));
        }

        let required_a = Self::required_ring_bits(c, k, h, n, ncb)?;
        let a = if ring_bits == 0 { required_a } else { ring_bits };
        if a < required_a {
            return Err(ProtocolError::Config(format!(
                "ring width {a} too small: the truncated aggregate needs {required_a} bits"
            )));
        }
        if a > ring::MAX_RING_BITS {
            return Err(ProtocolError::Config(format!(
                "ring width {a} exceeds the {}-bit word",
                ring::MAX_RING_BITS
            )));
        }

        // shares of everything a computing server accumulates must stay
        // well inside i128: n client sharings of 1+kappa bits plus k noise
        // sharings of ncb+kappa bits, each at most h times the draw bound
        let client_part = (n as u128)
            .checked_mul(1u128 << (1 + kappa))
            .ok_or_else(|| ProtocolError::Config("parameters overflow the share width".into()))?;
        let noise_part = (k as u128 * h as u128) << (ncb + kappa);
        let magnitude = client_part
            .checked_add(noise_part)
            .ok_or_else(|| ProtocolError::Config("parameters overflow the share width".into()))?;
        if bitlen(magnitude) > 120 {
            return Err(ProtocolError::Config(format!(
                "aggregate shares would need {} bits; reduce kappa, n, or the noise cap",
                bitlen(magnitude)
            )));
        }

        Ok(Self { epsilon, p, c, k, t, h, kappa, d, n, a, noise_cap_bits: ncb })
    }

    /// Smallest ring width that fits the truncated aggregate: counts plus
    /// `k` capped noise vectors, divided by `2^c`, plus the truncation
    /// error `h/2` and the positivity offset, below `2^(a-1)`.
    fn required_ring_bits(c: u32, k: usize, h: usize, n: u64, ncb: u32) -> Result<u32, ProtocolError> {
        let z_max = (n as u128) + (k as u128) * ((1u128 << ncb) - 1);
        let y_max = z_max.div_ceil(1u128 << c) + h as u128 / 2 + Self::offset_for(h) as u128;
        Ok(bitlen(y_max) + 1)
    }

    /// Public offset added to every converted ring share so the argmax
    /// never sees a wrapped-negative truncation result. Added once (by the
    /// first computing server) to every coordinate, it shifts all values
    /// equally and leaves the argmax unchanged.
    pub fn offset_for(h: usize) -> u64 {
        (h as u64 + 1) / 2
    }

    pub fn positivity_offset(&self) -> u64 {
        Self::offset_for(self.h)
    }

    /// Ring width the simplified textbook rule `a = log(n) - c + 1` would
    /// give; it leaves no room for the noise or the comparison headroom
    /// bit, so the derived width is usually larger.
    pub fn heuristic_ring_bits(&self) -> u32 {
        (bitlen(self.n as u128)).saturating_sub(self.c) + 1
    }

    pub fn role_of(&self, server: usize) -> ServerRole {
        if server < self.h {
            ServerRole::Computing(server)
        } else {
            ServerRole::Supporting(server)
        }
    }

    /// Resampling threshold: draws at or above this are redrawn.
    pub fn noise_cap(&self) -> u64 {
        1u64 << self.noise_cap_bits
    }

    /// Negative binomial shape parameter `1/(k-t)` for each server's draw.
    pub fn nb_share(&self) -> f64 {
        1.0 / (self.k - self.t) as f64
    }
}
