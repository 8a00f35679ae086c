//! Benchmark harness behind the CLI: histogram ingestion, synthetic data
//! generation, utility sweeps over privacy-budget grids, protocol cost
//! sweeps over `(d, a)` grids, and deterministic CSV emission.

mod csv;
mod data;
mod sweep;

pub use csv::{
    emit_cost_csv, emit_utility_csv, fmt_sig, parse_cost_csv, parse_utility_csv, COST_HEADER,
    UTILITY_HEADER,
};
pub use data::{
    bits_required, discretize, load_histogram, synthetic_hepth, synthetic_one_hot_inputs,
    synthetic_power_law, trunc_bits_for_alpha,
};
pub use sweep::{
    expand_to_one_hot, run_cost_sweep, run_utility_sweep, BenchConfig, CostRow, CostTransport,
    DataSpec, Mechanism, TruncSpec, UtilityRow,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::dp::DpError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("benchmark configuration error: {0}")]
    Config(String),
    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Dp(#[from] DpError),
}
