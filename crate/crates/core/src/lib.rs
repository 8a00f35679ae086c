//! Differentially private selection with distributed trust.
//!
//! Data owners secret-share binary vectors to `k` servers; the servers add
//! distributed one-sided noise, truncate their shares locally, and run a
//! secure argmax so that only the index of an approximately largest
//! coordinate is ever released. No single server (or any minority
//! coalition) learns anything else about the inputs.
//!
//! The crate is organized around five pieces:
//!
//! - [`dp`]: plaintext noise samplers, the central-model noisy-argmax
//!   mechanism, and the baseline mechanisms used in utility benchmarks.
//! - [`iss`]: additive integer secret sharing with local addition,
//!   truncation, and conversion to sharings over `Z_{2^a}`.
//! - [`mpc`]: correlated-randomness preprocessing and the secure
//!   comparison / selection / tournament-argmax circuits.
//! - [`protocol`]: the end-to-end multi-server protocol, its ideal
//!   functionality, transcript accounting, and the corrupted-view audit.
//! - [`bench`]: histogram ingestion, synthetic data, and the utility /
//!   cost sweep harnesses behind the CLI.
//!
//! Communication goes through the [`net`] transport contract, with an
//! in-memory simulator (exact byte accounting) and a TCP implementation
//! sharing one wire format.

pub mod bench;
pub mod dp;
pub mod iss;
pub mod mpc;
pub mod net;
pub mod protocol;
pub mod ring;

pub use dp::{DpParams, Histogram, SelectionResult};
