//! In-memory transport simulator.
//!
//! Channels are unbounded FIFO queues carrying encoded frames, so byte
//! accounting matches the TCP wire exactly. Sends never block; receives
//! block until the peer's frame arrives or the peer is gone. An optional
//! jitter mode delays each send by a seeded random amount, which permutes
//! cross-channel arrival order without breaking per-channel FIFO; protocol
//! results must not depend on it.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Channel, Endpoint, Frame, NetError, PartyId};

struct SimChannel {
    peer: PartyId,
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    jitter: Option<ChaCha20Rng>,
}

impl Channel for SimChannel {
    fn send(&mut self, frame: &Frame) -> Result<(), NetError> {
        if let Some(rng) = self.jitter.as_mut() {
            std::thread::sleep(Duration::from_micros(rng.random_range(0..200)));
        }
        self.tx
            .send(frame.encode())
            .map_err(|_| NetError::Disconnected(self.peer))
    }

    fn recv(&mut self) -> Result<Frame, NetError> {
        let bytes = self.rx.recv().map_err(|_| NetError::Disconnected(self.peer))?;
        Frame::decode(&bytes)
    }
}

/// Build a fully connected set of `k` endpoints.
pub fn mesh(k: usize) -> Vec<Endpoint> {
    mesh_inner(k, None)
}

/// Like [`mesh`], with seeded random send delays for scheduling tests.
pub fn mesh_with_jitter(k: usize, seed: u64) -> Vec<Endpoint> {
    mesh_inner(k, Some(seed))
}

fn mesh_inner(k: usize, jitter_seed: Option<u64>) -> Vec<Endpoint> {
    let mut endpoints: Vec<Endpoint> = (0..k).map(|i| Endpoint::new(i as PartyId)).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            let (tx_ij, rx_ij) = channel();
            let (tx_ji, rx_ji) = channel();
            let jitter = |salt: u64| {
                jitter_seed.map(|s| {
                    ChaCha20Rng::seed_from_u64(s ^ (i as u64) << 32 ^ (j as u64) << 16 ^ salt)
                })
            };
            endpoints[i].add_peer(
                j as PartyId,
                Box::new(SimChannel { peer: j as PartyId, tx: tx_ij, rx: rx_ji, jitter: jitter(0) }),
            );
            endpoints[j].add_peer(
                i as PartyId,
                Box::new(SimChannel { peer: i as PartyId, tx: tx_ji, rx: rx_ij, jitter: jitter(1) }),
            );
        }
    }
    endpoints
}
