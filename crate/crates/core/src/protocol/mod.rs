//! The multi-server selection protocol: configuration, the ideal
//! functionality it implements, per-role server executors, in-process and
//! batch runners, transcript accounting, and the corrupted-view audit.

mod audit;
mod config;
mod ideal;
mod run;
mod streams;

pub use audit::{audit_corrupted_view, check_randomness_freshness, check_share_hiding, ViewSummary};
pub use config::{ProtocolConfig, ServerRole, SessionParams};
pub use ideal::{
    ideal_functionality, ideal_functionality_hist, ideal_functionality_seeded, IdealOutcome,
    LeakageRecord, TruncRounding,
};
pub use run::{
    client_fold, client_share_input, run_computing_server, run_protocol, run_protocol_batch,
    run_protocol_pinned, run_protocol_tcp, run_supporting_server, BatchOptions, ComputingRun,
    PartyStats, PreprocMode, RunOptions, RunOutcome, SupportingRun, Transcript, TranscriptStats,
};
pub use streams::{party_rng, run_master, StreamParty, StreamPurpose};

use thiserror::Error;

use crate::dp::DpError;
use crate::iss::IssError;
use crate::mpc::MpcError;
use crate::net::NetError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Iss(#[from] IssError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("protocol aborted at server {server}: {reason}")]
    Aborted { server: usize, reason: String },
    #[error("internal error: {0}")]
    Internal(String),
}
