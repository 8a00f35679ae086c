//! Party-to-party transport.
//!
//! Parties are sequential state machines that talk only through
//! [`Endpoint`]s. A channel guarantees reliable, in-order delivery per
//! direction; there is no shared state between parties. Two
//! implementations honor the contract: an in-memory simulator with exact
//! byte accounting ([`sim`]) and TCP with the same length-prefixed frames
//! ([`tcp`]).

mod frame;
pub mod sim;
pub mod tcp;

pub use frame::{Frame, Phase, FRAME_HEADER_LEN};

use std::collections::BTreeMap;

use thiserror::Error;

pub type PartyId = u32;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("peer {0} disconnected")]
    Disconnected(PartyId),
    #[error("no channel to peer {0}")]
    UnknownPeer(PartyId),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One direction-agnostic link to a peer.
pub trait Channel: Send {
    fn send(&mut self, frame: &Frame) -> Result<(), NetError>;
    /// Blocks until the peer's next frame arrives.
    fn recv(&mut self) -> Result<Frame, NetError>;
}

/// Sent/received byte and message counts, split by protocol phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficCounters {
    pub sent_bytes: [u64; 4],
    pub recv_bytes: [u64; 4],
    pub sent_messages: u64,
    pub recv_messages: u64,
}

impl TrafficCounters {
    pub fn sent_offline(&self) -> u64 {
        self.sent_bytes[Phase::Preproc.opcode() as usize]
    }

    pub fn sent_online(&self) -> u64 {
        self.sent_bytes.iter().sum::<u64>() - self.sent_offline()
    }
}

/// A party's view of the network: one channel per peer, plus traffic
/// counters fed by every send/recv.
pub struct Endpoint {
    id: PartyId,
    peers: BTreeMap<PartyId, Box<dyn Channel>>,
    counters: TrafficCounters,
}

impl Endpoint {
    pub fn new(id: PartyId) -> Self {
        Self { id, peers: BTreeMap::new(), counters: TrafficCounters::default() }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn add_peer(&mut self, peer: PartyId, channel: Box<dyn Channel>) {
        self.peers.insert(peer, channel);
    }

    /// Drop the link to `peer` (test hook for abort handling).
    pub fn disconnect(&mut self, peer: PartyId) {
        self.peers.remove(&peer);
    }

    pub fn counters(&self) -> &TrafficCounters {
        &self.counters
    }

    pub fn send(&mut self, to: PartyId, phase: Phase, payload: Vec<u8>) -> Result<(), NetError> {
        let frame = Frame::new(phase, self.id, payload);
        let chan = self.peers.get_mut(&to).ok_or(NetError::UnknownPeer(to))?;
        chan.send(&frame)?;
        self.counters.sent_bytes[phase.opcode() as usize] += frame.wire_len();
        self.counters.sent_messages += 1;
        Ok(())
    }

    /// Receive the next frame from `from`, checking it carries the
    /// expected phase and sender id.
    pub fn recv(&mut self, from: PartyId, phase: Phase) -> Result<Frame, NetError> {
        let chan = self.peers.get_mut(&from).ok_or(NetError::UnknownPeer(from))?;
        let frame = chan.recv()?;
        if frame.sender != from {
            return Err(NetError::Malformed(format!(
                "frame from channel {from} claims sender {}",
                frame.sender
            )));
        }
        if frame.phase != phase {
            return Err(NetError::Malformed(format!(
                "expected phase {:?}, got {:?} from {from}",
                phase, frame.phase
            )));
        }
        self.counters.recv_bytes[frame.phase.opcode() as usize] += frame.wire_len();
        self.counters.recv_messages += 1;
        Ok(frame)
    }
}
