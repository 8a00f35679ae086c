//! Round-driven secure computation among the computing servers.
//!
//! All operations work on this server's additive shares over `Z_{2^a}`.
//! The only values ever published are masked openings (`value + r` for a
//! fresh uniform `r`), Beaver-masked differences, and the final argmax
//! index; comparison bits stay shared throughout.
//!
//! Independent tournament nodes at the same tree level batch their
//! messages: one round sends a single ARGMAX frame per peer containing
//! every node's sub-messages. A sub-message is `opcode (1 byte) || node id
//! (4 bytes LE) || ring elements (8 bytes LE each)`; the element count is
//! fixed by the (data-independent) protocol position, and receivers
//! verify opcode and node id in lockstep.

use crate::net::{Endpoint, PartyId, Phase};
use crate::ring;

use super::preprocess::CorrPool;
use super::MpcError;

/// Kind of a published value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenKind {
    Masked,
    Final,
    TripleOpen,
}

impl OpenKind {
    pub fn opcode(self) -> u8 {
        match self {
            OpenKind::Masked => 0,
            OpenKind::Final => 1,
            OpenKind::TripleOpen => 2,
        }
    }

    fn from_opcode(op: u8) -> Result<Self, MpcError> {
        match op {
            0 => Ok(OpenKind::Masked),
            1 => Ok(OpenKind::Final),
            2 => Ok(OpenKind::TripleOpen),
            other => Err(MpcError::Malformed(format!("unknown opening opcode {other}"))),
        }
    }
}

/// Node id carried by the final index opening.
pub const FINAL_NODE_ID: u32 = u32::MAX;

/// One published (opened) value set, as observed by every computing server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opening {
    pub kind: OpenKind,
    pub node: u32,
    pub values: Vec<u64>,
}

/// Everything a run of the engine exposes for transcript auditing.
#[derive(Debug, Clone, Default)]
pub struct ArgmaxAudit {
    pub openings: Vec<Opening>,
    pub edabit_ids: Vec<u64>,
    pub triple_ids: Vec<u64>,
    pub comparisons: usize,
    pub rounds: u64,
}

impl ArgmaxAudit {
    pub fn count(&self, kind: OpenKind) -> usize {
        self.openings.iter().filter(|o| o.kind == kind).count()
    }
}

/// A shared value carrying a shared index tag through the tournament.
/// The tag is held as base-`2^a` limbs so narrow rings can still address
/// every leaf of a wide tournament.
#[derive(Debug, Clone)]
pub struct TaggedShare {
    pub value: u64,
    pub index: Vec<u64>,
}

impl TaggedShare {
    /// Tag `value_share` with the public leaf index `index`, which the
    /// first server carries in the shares.
    pub fn new(value_share: u64, index: u64, party: usize, a: u32, limbs: usize) -> Self {
        let index = (0..limbs)
            .map(|j| public_share((index >> (a as usize * j) as u32) & ring::mask(a), party, a))
            .collect();
        Self { value: value_share, index }
    }
}

/// Share of a public constant: the first server holds the value, everyone
/// else holds zero.
pub fn public_share(value: u64, party: usize, a: u32) -> u64 {
    if party == 0 {
        value & ring::mask(a)
    } else {
        0
    }
}

struct OpenEntry {
    kind: OpenKind,
    node: u32,
    shares: Vec<u64>,
}

/// Secure-computation engine bound to one computing server's pool and
/// network endpoint.
pub struct ArgmaxEngine<'a> {
    party: usize,
    h: usize,
    a: u32,
    pool: &'a mut CorrPool,
    net: &'a mut Endpoint,
    audit: ArgmaxAudit,
}

impl<'a> ArgmaxEngine<'a> {
    pub fn new(
        party: usize,
        h: usize,
        pool: &'a mut CorrPool,
        net: &'a mut Endpoint,
    ) -> Result<Self, MpcError> {
        if party >= h || h < 2 {
            return Err(MpcError::InvalidParameter(format!("party {party} of {h}")));
        }
        let a = pool.ring_bits;
        if a < 2 || a > ring::MAX_RING_BITS {
            return Err(MpcError::InvalidParameter(format!("ring width {a}")));
        }
        Ok(Self { party, h, a, pool, net, audit: ArgmaxAudit::default() })
    }

    pub fn ring_bits(&self) -> u32 {
        self.a
    }

    pub fn finish(self) -> ArgmaxAudit {
        self.audit
    }

    pub fn audit(&self) -> &ArgmaxAudit {
        &self.audit
    }

    /// One communication round: send every entry's share words to each
    /// peer, receive theirs, and return the opened (summed) values entry
    /// by entry. Every opening is recorded in the audit log.
    fn exchange(&mut self, entries: Vec<OpenEntry>) -> Result<Vec<Vec<u64>>, MpcError> {
        let mut payload = Vec::new();
        for e in &entries {
            payload.push(e.kind.opcode());
            payload.extend_from_slice(&e.node.to_le_bytes());
            for s in &e.shares {
                payload.extend_from_slice(&s.to_le_bytes());
            }
        }
        for peer in 0..self.h as PartyId {
            if peer as usize != self.party {
                self.net.send(peer, Phase::Argmax, payload.clone())?;
            }
        }

        let mut opened: Vec<Vec<u64>> = entries.iter().map(|e| e.shares.clone()).collect();
        for peer in 0..self.h as PartyId {
            if peer as usize == self.party {
                continue;
            }
            let frame = self.net.recv(peer, Phase::Argmax)?;
            let mut pos = 0usize;
            let buf = &frame.payload;
            for (ei, e) in entries.iter().enumerate() {
                let need = 5 + 8 * e.shares.len();
                let chunk = buf.get(pos..pos + need).ok_or_else(|| {
                    MpcError::Malformed(format!("opening from {peer} truncated"))
                })?;
                let kind = OpenKind::from_opcode(chunk[0])?;
                let node = u32::from_le_bytes(chunk[1..5].try_into().expect("4 bytes"));
                if kind != e.kind || node != e.node {
                    return Err(MpcError::Malformed(format!(
                        "peer {peer} opened ({kind:?}, {node}), expected ({:?}, {})",
                        e.kind, e.node
                    )));
                }
                for (wi, word) in chunk[5..].chunks_exact(8).enumerate() {
                    let share = u64::from_le_bytes(word.try_into().expect("8 bytes"));
                    opened[ei][wi] = ring::add(opened[ei][wi], share, self.a);
                }
                pos += need;
            }
            if pos != buf.len() {
                return Err(MpcError::Malformed(format!("trailing bytes from {peer}")));
            }
        }

        self.audit.rounds += 1;
        for (e, vals) in entries.iter().zip(&opened) {
            self.audit.openings.push(Opening { kind: e.kind, node: e.node, values: vals.clone() });
        }
        Ok(opened)
    }

    /// Batched Beaver multiplication: one round opening `(x - u, y - v)`
    /// per product, grouped per node. Consumes one triple per product.
    fn mul_batch(
        &mut self,
        products: &[(u64, u64)],
        node_of: &[u32],
    ) -> Result<Vec<u64>, MpcError> {
        debug_assert_eq!(products.len(), node_of.len());
        let a = self.a;
        let mut triples = Vec::with_capacity(products.len());
        for _ in products {
            let t = self.pool.take_triple()?;
            self.audit.triple_ids.push(t.id);
            triples.push(t);
        }

        // group consecutive products of the same node into one entry
        let mut entries: Vec<OpenEntry> = Vec::new();
        let mut spans: Vec<(usize, usize)> = Vec::new(); // product range per entry
        for (i, (&(x, y), t)) in products.iter().zip(&triples).enumerate() {
            let d = ring::sub(x, t.u, a);
            let e = ring::sub(y, t.v, a);
            let same_node = entries
                .last()
                .map(|last| last.node == node_of[i])
                .unwrap_or(false);
            if same_node {
                let last = entries.last_mut().expect("non-empty");
                last.shares.push(d);
                last.shares.push(e);
                spans.last_mut().expect("non-empty").1 = i + 1;
            } else {
                entries.push(OpenEntry {
                    kind: OpenKind::TripleOpen,
                    node: node_of[i],
                    shares: vec![d, e],
                });
                spans.push((i, i + 1));
            }
        }

        let opened = self.exchange(entries)?;
        let mut out = vec![0u64; products.len()];
        for (entry_vals, &(start, end)) in opened.iter().zip(&spans) {
            for (j, i) in (start..end).enumerate() {
                let d = entry_vals[2 * j];
                let e = entry_vals[2 * j + 1];
                let t = &triples[i];
                // z = w + d*v + e*u (+ d*e once, added by the first server)
                let mut z = t.w;
                z = ring::add(z, ring::mul(d, t.v, a), a);
                z = ring::add(z, ring::mul(e, t.u, a), a);
                if self.party == 0 {
                    z = ring::add(z, ring::mul(d, e, a), a);
                }
                out[i] = z;
            }
        }
        Ok(out)
    }

    /// Batched strict unsigned comparison: returns shares of `[u < v]` per
    /// pair. Both reconstructed operands must lie in `[0, 2^(a-1))`.
    ///
    /// Realization: open `m = u - v + 2^(a-1) + r` (uniform thanks to the
    /// EdaBit mask), then evaluate the borrow of `m' - r'` over the low
    /// `a-1` bits with a log-depth prefix circuit on the shared bits of
    /// `r`, and fold it into the top bit.
    fn lt_batch(&mut self, pairs: &[(u64, u64)], nodes: &[u32]) -> Result<Vec<u64>, MpcError> {
        debug_assert_eq!(pairs.len(), nodes.len());
        let a = self.a;
        let half = 1u64 << (a - 1);
        let n = pairs.len();

        let mut edabits = Vec::with_capacity(n);
        let mut entries = Vec::with_capacity(n);
        for (&(u, v), &node) in pairs.iter().zip(nodes) {
            let e = self.pool.take_edabit()?;
            self.audit.edabit_ids.push(e.id);
            let mut m = ring::sub(u, v, a);
            m = ring::add(m, e.r, a);
            if self.party == 0 {
                m = ring::add(m, half, a);
            }
            entries.push(OpenEntry { kind: OpenKind::Masked, node, shares: vec![m] });
            edabits.push(e);
        }
        let opened = self.exchange(entries)?;
        let masks: Vec<u64> = opened.into_iter().map(|vals| vals[0]).collect();

        // borrow circuit leaves, MSB first over bits a-2 .. 0:
        // gt_i = r_i * (1 - m_i), eq_i = 1 - (r_i xor m_i); both linear in
        // the shared r_i because the m bits are public.
        let one = |party: usize| public_share(1, party, a);
        let mut layers: Vec<Vec<(u64, u64)>> = Vec::with_capacity(n);
        for (i, e) in edabits.iter().enumerate() {
            let m = masks[i];
            let mut leaves = Vec::with_capacity(a as usize - 1);
            for bit in (0..a - 1).rev() {
                let m_bit = (m >> bit) & 1;
                let r_bit = e.bits[bit as usize];
                let (gt, eq) = if m_bit == 0 {
                    (r_bit, ring::sub(one(self.party), r_bit, a))
                } else {
                    (0, r_bit)
                };
                leaves.push((gt, eq));
            }
            layers.push(leaves);
        }

        // prefix reduction: combine (hi, lo) -> (gt_hi + eq_hi*gt_lo, eq_hi*eq_lo)
        while layers[0].len() > 1 {
            let mut products = Vec::new();
            let mut node_of = Vec::new();
            for (li, layer) in layers.iter().enumerate() {
                for pair in layer.chunks_exact(2) {
                    let (_, eq_hi) = pair[0];
                    let (gt_lo, eq_lo) = pair[1];
                    products.push((eq_hi, gt_lo));
                    products.push((eq_hi, eq_lo));
                    node_of.push(nodes[li]);
                    node_of.push(nodes[li]);
                }
            }
            let muls = self.mul_batch(&products, &node_of)?;
            let mut mi = 0usize;
            for layer in layers.iter_mut() {
                let mut next = Vec::with_capacity(layer.len().div_ceil(2));
                let mut chunks = layer.chunks_exact(2);
                for pair in &mut chunks {
                    let (gt_hi, _) = pair[0];
                    let gt = ring::add(gt_hi, muls[mi], a);
                    let eq = muls[mi + 1];
                    mi += 2;
                    next.push((gt, eq));
                }
                if let [odd] = chunks.remainder() {
                    next.push(*odd);
                }
                *layer = next;
            }
        }

        // top bit: s_top = (m_top xor r_top) xor borrow, lt = 1 - s_top
        let mut products = Vec::with_capacity(n);
        let mut t1s = Vec::with_capacity(n);
        for (i, e) in edabits.iter().enumerate() {
            let m_top = (masks[i] >> (a - 1)) & 1;
            let r_top = e.bits[(a - 1) as usize];
            let t1 = if m_top == 0 { r_top } else { ring::sub(one(self.party), r_top, a) };
            let borrow = layers[i][0].0;
            products.push((t1, borrow));
            t1s.push((t1, borrow));
        }
        let muls = self.mul_batch(&products, nodes)?;
        let mut out = Vec::with_capacity(n);
        for (i, &(t1, borrow)) in t1s.iter().enumerate() {
            let mut s_top = ring::add(t1, borrow, a);
            s_top = ring::sub(s_top, ring::mul(2, muls[i], a), a);
            out.push(ring::sub(one(self.party), s_top, a));
        }
        self.audit.comparisons += n;
        Ok(out)
    }

    /// Shares of `[u < v]` (strict, unsigned). See [`Self::lt_batch`].
    pub fn secure_lt(&mut self, u: u64, v: u64) -> Result<u64, MpcError> {
        Ok(self.lt_batch(&[(u, v)], &[0])?[0])
    }

    /// Shares of `b*v + (1-b)*u` via one Beaver multiplication.
    pub fn secure_mux(&mut self, b: u64, u: u64, v: u64) -> Result<u64, MpcError> {
        let diff = ring::sub(v, u, self.a);
        let prod = self.mul_batch(&[(b, diff)], &[0])?[0];
        Ok(ring::add(u, prod, self.a))
    }

    /// Tournament argmax over `items`; returns the opened index of the
    /// (lowest-index on ties) maximum. Exactly `d - 1` comparisons; the
    /// comparison bits stay shared and only `d - 1` masked values plus the
    /// final index are published.
    pub fn secure_argmax(&mut self, items: &[TaggedShare]) -> Result<u64, MpcError> {
        if items.is_empty() {
            return Err(MpcError::InvalidParameter("empty argmax input".into()));
        }
        let a = self.a;
        let limbs = items[0].index.len();
        if limbs == 0 || items.iter().any(|t| t.index.len() != limbs) {
            return Err(MpcError::InvalidParameter("inconsistent index tag widths".into()));
        }
        let mut level: Vec<TaggedShare> = items.to_vec();
        let mut next_node: u32 = 0;

        while level.len() > 1 {
            let mut winners = Vec::with_capacity(level.len().div_ceil(2));
            let mut pairs = Vec::new();
            let mut nodes = Vec::new();
            let mut chunks = level.chunks_exact(2);
            let mut contest: Vec<(TaggedShare, TaggedShare)> = Vec::new();
            for pair in &mut chunks {
                pairs.push((pair[0].value, pair[1].value));
                nodes.push(next_node);
                next_node += 1;
                contest.push((pair[0].clone(), pair[1].clone()));
            }
            let bye = chunks.remainder().first().cloned();

            let bits = self.lt_batch(&pairs, &nodes)?;

            // winner = left + b*(right - left), for the value and every
            // index limb, all in one round
            let mut products = Vec::with_capacity((1 + limbs) * contest.len());
            let mut node_of = Vec::with_capacity((1 + limbs) * contest.len());
            for (i, (l, r)) in contest.iter().enumerate() {
                products.push((bits[i], ring::sub(r.value, l.value, a)));
                node_of.push(nodes[i]);
                for j in 0..limbs {
                    products.push((bits[i], ring::sub(r.index[j], l.index[j], a)));
                    node_of.push(nodes[i]);
                }
            }
            let muls = self.mul_batch(&products, &node_of)?;
            for (i, (l, _)) in contest.iter().enumerate() {
                let base = (1 + limbs) * i;
                winners.push(TaggedShare {
                    value: ring::add(l.value, muls[base], a),
                    index: (0..limbs)
                        .map(|j| ring::add(l.index[j], muls[base + 1 + j], a))
                        .collect(),
                });
            }
            if let Some(b) = bye {
                winners.push(b);
            }
            level = winners;
        }

        let opened = self.exchange(vec![OpenEntry {
            kind: OpenKind::Final,
            node: FINAL_NODE_ID,
            shares: level[0].index.clone(),
        }])?;
        let mut index = 0u64;
        for (j, &limb) in opened[0].iter().enumerate() {
            index |= limb << (a as usize * j) as u32;
        }
        Ok(index)
    }
}

/// Exact online rounds of [`ArgmaxEngine::secure_argmax`] for a `d`-leaf
/// tournament over `Z_{2^a}`: each level opens masks (1), reduces the
/// borrow circuit (`ceil(log2(a-1))`), folds the top bit (1), and muxes
/// the winners (1); one final round opens the index.
pub fn argmax_rounds(d: usize, a: u32) -> u64 {
    if d <= 1 {
        return 1;
    }
    let levels = (usize::BITS - (d - 1).leading_zeros()) as u64; // ceil(log2 d)
    let borrow_depth = ceil_log2(a as u64 - 1);
    levels * (3 + borrow_depth) + 1
}

fn ceil_log2(x: u64) -> u64 {
    debug_assert!(x >= 1);
    (64 - (x - 1).leading_zeros()) as u64
}
