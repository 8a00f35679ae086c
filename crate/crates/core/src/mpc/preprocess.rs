//! Correlated randomness for the secure argmax: shared random ring
//! elements with shared bit decompositions (EdaBits) and Beaver
//! multiplication triples, bundled into per-server pools.
//!
//! In the three-server deployment the single supporting server acts as a
//! dealer: it draws everything in plaintext and additively shares it to
//! the two computing servers. For more servers the honest-majority
//! generation is not run for real; the dealer construction produces the
//! same output distribution and the transcript is charged according to
//! the cost model of the real protocol (see
//! [`simulated_honest_majority_preprocess`]).

use rand::Rng;

use crate::ring;

use super::MpcError;

/// One server's share of an EdaBit: additive shares (mod `2^a`) of a
/// uniform ring element `r` together with shares of each of its bits.
/// The element share is the bit-composition `sum 2^i * bits[i]`, so
/// `reconstruct(r) = sum 2^i * reconstruct(b_i)` holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdaBitShare {
    pub id: u64,
    pub r: u64,
    pub bits: Vec<u64>,
}

/// One server's share of a Beaver triple `(u, v, w)` with `w = u*v mod 2^a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleShare {
    pub id: u64,
    pub u: u64,
    pub v: u64,
    pub w: u64,
}

/// Ring elements needed to carry an index tag for a `d`-leaf tournament:
/// indices are muxed limb-wise in base `2^a` so narrow rings still
/// address every leaf.
pub fn index_limbs(d: usize, a: u32) -> usize {
    let bits = (usize::BITS - d.saturating_sub(1).leading_zeros()).max(1);
    bits.div_ceil(a) as usize
}

/// Beaver multiplications consumed by one comparison node: `2(a-2)` for
/// the borrow reduction, one for folding the borrow into the top bit, one
/// for the value mux, and one per index limb.
pub fn triples_per_comparison(a: u32, limbs: usize) -> usize {
    2 * (a as usize).saturating_sub(2) + 2 + limbs
}

/// Pool sizing for a `d`-leaf tournament.
pub fn pool_requirement(d: usize, a: u32) -> (usize, usize) {
    let comparisons = d.saturating_sub(1);
    (comparisons, comparisons * triples_per_comparison(a, index_limbs(d, a)))
}

/// One server's stock of correlated randomness. Items are consumed by
/// monotone counters and never reused; exhaustion is an error.
#[derive(Debug, Clone)]
pub struct CorrPool {
    /// Nonce of the preprocessing run that produced this pool.
    pub generation: u64,
    pub ring_bits: u32,
    edabits: Vec<EdaBitShare>,
    triples: Vec<TripleShare>,
    next_edabit: usize,
    next_triple: usize,
}

impl CorrPool {
    pub fn new(
        generation: u64,
        ring_bits: u32,
        edabits: Vec<EdaBitShare>,
        triples: Vec<TripleShare>,
    ) -> Self {
        Self { generation, ring_bits, edabits, triples, next_edabit: 0, next_triple: 0 }
    }

    pub fn take_edabit(&mut self) -> Result<EdaBitShare, MpcError> {
        let e = self.edabits.get(self.next_edabit).ok_or(MpcError::PoolExhausted("edabits"))?;
        self.next_edabit += 1;
        Ok(e.clone())
    }

    pub fn take_triple(&mut self) -> Result<TripleShare, MpcError> {
        let t = self.triples.get(self.next_triple).ok_or(MpcError::PoolExhausted("triples"))?;
        self.next_triple += 1;
        Ok(*t)
    }

    pub fn edabits_total(&self) -> usize {
        self.edabits.len()
    }

    pub fn triples_total(&self) -> usize {
        self.triples.len()
    }

    pub fn consumed(&self) -> (usize, usize) {
        (self.next_edabit, self.next_triple)
    }

    /// Number of shared random bits held (each EdaBit carries `a`).
    pub fn shared_bits(&self) -> usize {
        self.edabits.iter().map(|e| e.bits.len()).sum()
    }

    /// Serialize for the dealer's preprocessing frame.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.generation.to_le_bytes());
        out.extend_from_slice(&self.ring_bits.to_le_bytes());
        out.extend_from_slice(&(self.edabits.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.triples.len() as u32).to_le_bytes());
        for e in &self.edabits {
            out.extend_from_slice(&e.r.to_le_bytes());
            for b in &e.bits {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        for t in &self.triples {
            out.extend_from_slice(&t.u.to_le_bytes());
            out.extend_from_slice(&t.v.to_le_bytes());
            out.extend_from_slice(&t.w.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, MpcError> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], MpcError> {
            let slice = bytes
                .get(pos..pos + n)
                .ok_or_else(|| MpcError::Malformed("preprocessing frame truncated".into()))?;
            pos += n;
            Ok(slice)
        };
        let generation = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        let ring_bits = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
        let n_eda = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let n_tri = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        if ring_bits < 2 || ring_bits > ring::MAX_RING_BITS {
            return Err(MpcError::Malformed(format!("bad ring width {ring_bits}")));
        }
        let mut edabits = Vec::with_capacity(n_eda);
        for id in 0..n_eda {
            let r = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
            let mut bits = Vec::with_capacity(ring_bits as usize);
            for _ in 0..ring_bits {
                bits.push(u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")));
            }
            edabits.push(EdaBitShare { id: id as u64, r, bits });
        }
        let mut triples = Vec::with_capacity(n_tri);
        for id in 0..n_tri {
            let u = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
            let v = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
            let w = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
            triples.push(TripleShare { id: id as u64, u, v, w });
        }
        if pos != bytes.len() {
            return Err(MpcError::Malformed("trailing bytes in preprocessing frame".into()));
        }
        Ok(Self::new(generation, ring_bits, edabits, triples))
    }
}

/// What a preprocessing run must produce.
#[derive(Debug, Clone, Copy)]
pub struct PreprocessSpec {
    /// Computing servers receiving pool shares.
    pub h: usize,
    /// Total server count (drives the simulated-mode cost charge).
    pub k: usize,
    pub ring_bits: u32,
    pub comparisons: usize,
    /// Ring elements per index tag (see [`index_limbs`]).
    pub index_limbs: usize,
}

impl PreprocessSpec {
    /// Spec for a `d`-leaf tournament.
    pub fn for_dimension(h: usize, k: usize, ring_bits: u32, d: usize) -> Self {
        Self {
            h,
            k,
            ring_bits,
            comparisons: d.saturating_sub(1),
            index_limbs: index_limbs(d, ring_bits),
        }
    }

    fn validate(&self) -> Result<(), MpcError> {
        if self.h < 2 {
            return Err(MpcError::InvalidParameter(format!(
                "need at least 2 computing servers, got {}",
                self.h
            )));
        }
        if self.k != 2 * (self.h - 1) + 1 {
            return Err(MpcError::InvalidParameter(format!(
                "server count {} does not match h = t+1 = {}",
                self.k, self.h
            )));
        }
        if self.ring_bits < 2 || self.ring_bits > ring::MAX_RING_BITS {
            return Err(MpcError::InvalidParameter(format!(
                "ring width {} outside [2, {}]",
                self.ring_bits,
                ring::MAX_RING_BITS
            )));
        }
        Ok(())
    }
}

/// Additively share `value` mod `2^a` among `h` servers into `out[s][slot]`.
fn share_into<R: Rng + ?Sized>(value: u64, a: u32, rng: &mut R, shares: &mut [u64]) {
    let h = shares.len();
    let mut acc = 0u64;
    for share in shares.iter_mut().take(h - 1) {
        *share = rng.random_range(0..(1u64 << a));
        acc = ring::add(acc, *share, a);
    }
    shares[h - 1] = ring::sub(value, acc, a);
}

/// Generate per-server pools dealer-style: all EdaBits and triples drawn
/// in plaintext, then shared. Faithful only for the three-server setting,
/// where the single supporting server is allowed to deal.
pub fn dealer_preprocess<R: Rng + ?Sized>(
    spec: &PreprocessSpec,
    rng: &mut R,
) -> Result<Vec<CorrPool>, MpcError> {
    spec.validate()?;
    if spec.k != 3 {
        return Err(MpcError::InvalidParameter(format!(
            "dealer preprocessing is restricted to k = 3, got k = {}",
            spec.k
        )));
    }
    Ok(generate_pools(spec, rng))
}

fn generate_pools<R: Rng + ?Sized>(spec: &PreprocessSpec, rng: &mut R) -> Vec<CorrPool> {
    let a = spec.ring_bits;
    let h = spec.h;
    let generation = rng.random::<u64>();
    let n_triples = spec.comparisons * triples_per_comparison(a, spec.index_limbs);

    let mut edabits: Vec<Vec<EdaBitShare>> = vec![Vec::with_capacity(spec.comparisons); h];
    let mut scratch = vec![0u64; h];
    for id in 0..spec.comparisons {
        let mut per_server_bits: Vec<Vec<u64>> = vec![Vec::with_capacity(a as usize); h];
        for _bit in 0..a {
            let b = rng.random_range(0..2u64);
            share_into(b, a, rng, &mut scratch);
            for (s, share) in scratch.iter().enumerate() {
                per_server_bits[s].push(*share);
            }
        }
        for (s, bits) in per_server_bits.into_iter().enumerate() {
            // element share composed locally from the bit shares
            let r = bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| ring::add(acc, ring::mul(1 << i, b, a), a));
            edabits[s].push(EdaBitShare { id: id as u64, r, bits });
        }
    }

    let mut triples: Vec<Vec<TripleShare>> = vec![Vec::with_capacity(n_triples); h];
    let (mut us, mut vs, mut ws) = (vec![0u64; h], vec![0u64; h], vec![0u64; h]);
    for id in 0..n_triples {
        let u = rng.random_range(0..(1u64 << a));
        let v = rng.random_range(0..(1u64 << a));
        let w = ring::mul(u, v, a);
        share_into(u, a, rng, &mut us);
        share_into(v, a, rng, &mut vs);
        share_into(w, a, rng, &mut ws);
        for s in 0..h {
            triples[s].push(TripleShare { id: id as u64, u: us[s], v: vs[s], w: ws[s] });
        }
    }

    edabits
        .into_iter()
        .zip(triples)
        .map(|(e, t)| CorrPool::new(generation, a, e, t))
        .collect()
}

/// Result of the simulated honest-majority preprocessing: pools with the
/// same distribution as the dealer's, plus the transcript charge for the
/// collaborative generation that is being stood in for.
#[derive(Debug, Clone)]
pub struct SimulatedPreprocess {
    pub pools: Vec<CorrPool>,
    /// Bytes charged to each server's offline transcript.
    pub charged_bytes_per_server: u64,
    /// Rounds charged to the offline phase (constant by construction).
    pub charged_rounds: u64,
}

/// Offline rounds charged by the simulated generation: one batched round
/// each for sharing, multiplying, and converting.
pub const SIMULATED_OFFLINE_ROUNDS: u64 = 3;

/// Stand-in for the collaborative honest-majority generation, valid for
/// any `k = 2t+1 >= 3`. Pools are drawn dealer-style (identical output
/// distribution); the offline transcript is charged per the cost model of
/// the real protocol: every shared value (the `a` bits of each EdaBit and
/// the three components of each triple) costs `k` ring-extension elements
/// of `a * ceil(log2 k)` bits in total, split evenly across servers.
pub fn simulated_honest_majority_preprocess<R: Rng + ?Sized>(
    spec: &PreprocessSpec,
    rng: &mut R,
) -> Result<SimulatedPreprocess, MpcError> {
    spec.validate()?;
    let pools = generate_pools(spec, rng);
    let a = spec.ring_bits as u64;
    let k = spec.k as u64;
    let log_k = (spec.k as f64).log2().ceil() as u64;
    let shared_values_per_comparison =
        a + 3 * triples_per_comparison(spec.ring_bits, spec.index_limbs) as u64;
    let total_bits = spec.comparisons as u64 * shared_values_per_comparison * k * a * log_k;
    let charged_bytes_per_server = total_bits.div_ceil(8 * k);
    Ok(SimulatedPreprocess {
        pools,
        charged_bytes_per_server,
        charged_rounds: SIMULATED_OFFLINE_ROUNDS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn reconstruct(shares: &[u64], a: u32) -> u64 {
        shares.iter().fold(0, |acc, &s| ring::add(acc, s, a))
    }

    #[test]
    fn edabit_invariant_holds() {
        let spec = PreprocessSpec { h: 2, k: 3, ring_bits: 4, comparisons: 1, index_limbs: 1 };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let pools = dealer_preprocess(&spec, &mut rng).unwrap();
            let e0 = &pools[0].edabits[0];
            let e1 = &pools[1].edabits[0];
            let r = reconstruct(&[e0.r, e1.r], 4);
            let mut composed = 0u64;
            for i in 0..4 {
                let bit = reconstruct(&[e0.bits[i], e1.bits[i]], 4);
                assert!(bit <= 1, "bit {bit} not binary");
                composed = ring::add(composed, ring::mul(1 << i, bit, 4), 4);
            }
            assert_eq!(r, composed);
        }
    }

    #[test]
    fn triple_invariant_holds() {
        let spec = PreprocessSpec { h: 2, k: 3, ring_bits: 5, comparisons: 1, index_limbs: 1 };
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let pools = dealer_preprocess(&spec, &mut rng).unwrap();
        assert_eq!(pools[0].triples_total(), triples_per_comparison(5, 1));
        for id in 0..pools[0].triples_total() {
            let t0 = pools[0].triples[id];
            let t1 = pools[1].triples[id];
            let u = reconstruct(&[t0.u, t1.u], 5);
            let v = reconstruct(&[t0.v, t1.v], 5);
            let w = reconstruct(&[t0.w, t1.w], 5);
            assert_eq!(w, ring::mul(u, v, 5));
        }
    }

    #[test]
    fn pool_for_1024_comparisons_has_enough_bits() {
        // a shared bits per comparison: at least a * 1023 for d = 1024
        let a = 6u32;
        let spec = PreprocessSpec { h: 2, k: 3, ring_bits: a, comparisons: 1023, index_limbs: index_limbs(1024, a) };
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let pools = dealer_preprocess(&spec, &mut rng).unwrap();
        assert!(pools[0].shared_bits() >= a as usize * 1023);
    }

    #[test]
    fn dealer_requires_three_servers() {
        let spec = PreprocessSpec { h: 3, k: 5, ring_bits: 4, comparisons: 1, index_limbs: 1 };
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert!(dealer_preprocess(&spec, &mut rng).is_err());
        assert!(simulated_honest_majority_preprocess(&spec, &mut rng).is_ok());
    }

    #[test]
    fn simulated_charge_is_linear_in_comparisons() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let spec1 = PreprocessSpec { h: 3, k: 5, ring_bits: 8, comparisons: 1023, index_limbs: 2 };
        let spec2 = PreprocessSpec { h: 3, k: 5, ring_bits: 8, comparisons: 2047, index_limbs: 2 };
        let s1 = simulated_honest_majority_preprocess(&spec1, &mut rng).unwrap();
        let s2 = simulated_honest_majority_preprocess(&spec2, &mut rng).unwrap();
        let ratio = s2.charged_bytes_per_server as f64 / s1.charged_bytes_per_server as f64;
        assert!((ratio - 2.0).abs() <= 0.1, "ratio {ratio}");
        assert_eq!(s1.charged_rounds, SIMULATED_OFFLINE_ROUNDS);
        assert_eq!(s2.charged_rounds, SIMULATED_OFFLINE_ROUNDS);
    }

    #[test]
    fn pool_consumption_is_monotone_and_bounded() {
        let spec = PreprocessSpec { h: 2, k: 3, ring_bits: 4, comparisons: 2, index_limbs: 1 };
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut pools = dealer_preprocess(&spec, &mut rng).unwrap();
        let pool = &mut pools[0];
        assert_eq!(pool.take_edabit().unwrap().id, 0);
        assert_eq!(pool.take_edabit().unwrap().id, 1);
        assert!(matches!(pool.take_edabit(), Err(MpcError::PoolExhausted("edabits"))));
        for id in 0..pool.triples_total() {
            assert_eq!(pool.take_triple().unwrap().id, id as u64);
        }
        assert!(matches!(pool.take_triple(), Err(MpcError::PoolExhausted("triples"))));
    }

    #[test]
    fn pool_wire_roundtrip() {
        let spec = PreprocessSpec { h: 2, k: 3, ring_bits: 4, comparisons: 3, index_limbs: 1 };
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let pools = dealer_preprocess(&spec, &mut rng).unwrap();
        let bytes = pools[0].to_le_bytes();
        let back = CorrPool::from_le_bytes(&bytes).unwrap();
        assert_eq!(back.generation, pools[0].generation);
        assert_eq!(back.edabits, pools[0].edabits);
        assert_eq!(back.triples, pools[0].triples);
        assert!(CorrPool::from_le_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
