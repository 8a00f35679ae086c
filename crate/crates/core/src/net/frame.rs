//! Wire framing shared by the in-memory simulator and the TCP transport.
//!
//! Frame layout, bit-exact on both transports:
//!
//! ```text
//! +----------------+-----------+------------------+----------+
//! | length: u32 LE | phase: u8 | sender: u32 LE   | payload  |
//! +----------------+-----------+------------------+----------+
//! ```
//!
//! `length` counts everything after the length field itself, i.e.
//! `5 + payload.len()`. The phase opcode identifies the protocol stage the
//! payload belongs to.

use super::NetError;

pub const FRAME_HEADER_LEN: usize = 5;

/// Protocol-phase opcode carried in every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Preproc,
    NoiseShare,
    Argmax,
    Open,
}

impl Phase {
    pub fn opcode(self) -> u8 {
        match self {
            Phase::Preproc => 0,
            Phase::NoiseShare => 1,
            Phase::Argmax => 2,
            Phase::Open => 3,
        }
    }

    pub fn from_opcode(op: u8) -> Result<Self, NetError> {
        match op {
            0 => Ok(Phase::Preproc),
            1 => Ok(Phase::NoiseShare),
            2 => Ok(Phase::Argmax),
            3 => Ok(Phase::Open),
            other => Err(NetError::Malformed(format!("unknown phase opcode {other}"))),
        }
    }
}

/// One protocol message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub phase: Phase,
    pub sender: u32,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(phase: Phase, sender: u32, payload: Vec<u8>) -> Self {
        Self { phase, sender, payload }
    }

    /// Total encoded size in bytes, including the length prefix.
    pub fn wire_len(&self) -> u64 {
        (4 + FRAME_HEADER_LEN + self.payload.len()) as u64
    }

    pub fn encode(&self) -> Vec<u8> {
        let body_len = (FRAME_HEADER_LEN + self.payload.len()) as u32;
        let mut out = Vec::with_capacity(4 + body_len as usize);
        out.extend_from_slice(&body_len.to_le_bytes());
        out.push(self.phase.opcode());
        out.extend_from_slice(&self.sender.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decode a frame from its encoded form (length prefix included).
    pub fn decode(bytes: &[u8]) -> Result<Self, NetError> {
        if bytes.len() < 4 + FRAME_HEADER_LEN {
            return Err(NetError::Malformed("frame shorter than header".into()));
        }
        let body_len = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
        if bytes.len() != 4 + body_len {
            return Err(NetError::Malformed(format!(
                "frame length field {body_len} does not match {} body bytes",
                bytes.len() - 4
            )));
        }
        let phase = Phase::from_opcode(bytes[4])?;
        let sender = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
        Ok(Self { phase, sender, payload: bytes[9..].to_vec() })
    }
}
