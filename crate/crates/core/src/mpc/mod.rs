//! Secure argmax building blocks: correlated-randomness preprocessing,
//! unsigned comparison over `Z_{2^a}`, oblivious selection, and the
//! tournament argmax run by the computing servers.

mod engine;
mod preprocess;

pub use engine::{
    argmax_rounds, public_share, ArgmaxAudit, ArgmaxEngine, OpenKind, Opening, TaggedShare,
    FINAL_NODE_ID,
};
pub use preprocess::{
    dealer_preprocess, index_limbs, pool_requirement, simulated_honest_majority_preprocess,
    triples_per_comparison, CorrPool, EdaBitShare, PreprocessSpec, SimulatedPreprocess,
    TripleShare, SIMULATED_OFFLINE_ROUNDS,
};

use thiserror::Error;

use crate::net::NetError;

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("correlated randomness exhausted: {0}")]
    PoolExhausted(&'static str),
    #[error("network failure: {0}")]
    Net(#[from] NetError),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
