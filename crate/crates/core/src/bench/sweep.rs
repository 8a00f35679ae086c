//! Utility and cost sweeps.
//!
//! Every (mechanism, epsilon, trial) cell draws from its own stream
//! derived from the sweep seed, so results do not depend on evaluation
//! order. The error metric is always `max_l x_l - x_chosen` against the
//! un-noised histogram.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dp::{
    baseline_exponential_mechanism, baseline_permute_and_flip,
    baseline_randomized_response_hist, baseline_secure_aggregation, baseline_uniform_random,
    central_noisy_argmax, DpParams, Histogram, SelectionResult,
};
use crate::protocol::{
    ideal_functionality_hist, run_protocol, ProtocolConfig, RunOptions, TruncRounding,
};

use super::data::{load_histogram, synthetic_hepth, synthetic_one_hot_inputs, synthetic_power_law, trunc_bits_for_alpha};
use super::BenchError;

/// Mechanisms the utility sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    OursCentral,
    OursIdealFunctionality,
    PermuteAndFlip,
    Exponential,
    RandomizedResponse,
    SecureAgg,
    Uniform,
}

impl Mechanism {
    pub const ALL: [Mechanism; 7] = [
        Mechanism::OursCentral,
        Mechanism::OursIdealFunctionality,
        Mechanism::PermuteAndFlip,
        Mechanism::Exponential,
        Mechanism::RandomizedResponse,
        Mechanism::SecureAgg,
        Mechanism::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::OursCentral => "ours-central",
            Mechanism::OursIdealFunctionality => "ours-ideal-functionality",
            Mechanism::PermuteAndFlip => "permute-and-flip",
            Mechanism::Exponential => "exponential",
            Mechanism::RandomizedResponse => "randomized-response",
            Mechanism::SecureAgg => "secure-agg",
            Mechanism::Uniform => "uniform",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, BenchError> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| BenchError::UnknownMechanism(name.to_string()))
    }
}

/// Where the benchmark data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// `index,count` CSV export.
    Path(PathBuf),
    /// The pinned HEPTH-shaped preset (d = 1024, max 1571).
    SyntheticHepth,
    /// Power-law histogram with the given max count and decay.
    SyntheticPowerLaw { d: usize, max_count: u64, shape: f64, seed: u64 },
}

impl DataSpec {
    pub fn dataset_name(&self) -> String {
        match self {
            DataSpec::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into()),
            DataSpec::SyntheticHepth => "hepth-synthetic".into(),
            DataSpec::SyntheticPowerLaw { .. } => "powerlaw-synthetic".into(),
        }
    }

    pub fn load(&self) -> Result<Histogram, BenchError> {
        match self {
            DataSpec::Path(p) => load_histogram(p),
            DataSpec::SyntheticHepth => Ok(synthetic_hepth()),
            DataSpec::SyntheticPowerLaw { d, max_count, shape, seed } => {
                Ok(synthetic_power_law(*d, *max_count, *shape, *seed))
            }
        }
    }
}

/// How many bits to truncate before selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncSpec {
    Bits(u32),
    /// Derive from the approximation parameter and the data maximum.
    Alpha(f64),
}

impl Default for TruncSpec {
    fn default() -> Self {
        TruncSpec::Bits(0)
    }
}

/// Utility sweep settings.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub data: DataSpec,
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub trunc: TruncSpec,
    pub mechanisms: Vec<Mechanism>,
    pub seed: u64,
    /// Run the ideal-functionality rows through the full MPC protocol
    /// instead of the (statistically identical) oracle.
    pub full_protocol: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            data: DataSpec::SyntheticHepth,
            epsilons: Vec::new(),
            runs: 1000,
            trunc: TruncSpec::default(),
            mechanisms: Mechanism::ALL.to_vec(),
            seed: 0,
            full_protocol: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityRow {
    pub dataset: String,
    pub mechanism: String,
    pub epsilon: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub d: usize,
    pub a: u32,
    pub online_bytes: u64,
    pub offline_bytes: u64,
    pub rounds: u64,
    pub wall_seconds: f64,
}

fn cell_rng(seed: u64, mechanism: usize, eps_index: usize, trial: usize) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(mechanism as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(eps_index as u64).to_le_bytes());
    key[24..32].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Run `cfg.runs` trials of every requested (mechanism, epsilon) cell and
/// report mean and standard deviation of the additive selection error,
/// sorted by (mechanism, epsilon).
pub fn run_utility_sweep(cfg: &BenchConfig) -> Result<Vec<UtilityRow>, BenchError> {
    if cfg.runs < 1 {
        return Err(BenchError::Config("need at least one run per cell".into()));
    }
    if cfg.epsilons.is_empty() {
        return Err(BenchError::Config("epsilon grid is empty".into()));
    }
    if let TruncSpec::Alpha(alpha) = cfg.trunc {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(BenchError::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
    }
    let hist = cfg.data.load()?;
    let dataset = cfg.data.dataset_name();
    let trunc_bits = match cfg.trunc {
        TruncSpec::Bits(c) => c,
        TruncSpec::Alpha(alpha) => trunc_bits_for_alpha(hist.max_count(), alpha, 2),
    };

    let mut rows = Vec::new();
    for &mechanism in &cfg.mechanisms {
        let mech_index = Mechanism::ALL
            .iter()
            .position(|m| *m == mechanism)
            .expect("mechanism in table");
        for (eps_index, &epsilon) in cfg.epsilons.iter().enumerate() {
            let mut errors = Vec::with_capacity(cfg.runs);
            for trial in 0..cfg.runs {
                let mut rng = cell_rng(cfg.seed, mech_index, eps_index, trial);
                let error = run_trial(mechanism, &hist, epsilon, trunc_bits, cfg, trial, &mut rng)?;
                errors.push(error as f64);
            }
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let var = if errors.len() > 1 {
                errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (errors.len() - 1) as f64
            } else {
                0.0
            };
            rows.push(UtilityRow {
                dataset: dataset.clone(),
                mechanism: if mechanism == Mechanism::OursIdealFunctionality && cfg.full_protocol
                {
                    "ours-protocol".into()
                } else {
                    mechanism.name().into()
                },
                epsilon,
                mean_error: mean,
                std_error: var.sqrt(),
                runs: cfg.runs,
            });
        }
    }
    rows.sort_by(|x, y| {
        x.mechanism.cmp(&y.mechanism).then(x.epsilon.partial_cmp(&y.epsilon).expect("finite"))
    });
    Ok(rows)
}

fn run_trial(
    mechanism: Mechanism,
    hist: &Histogram,
    epsilon: f64,
    trunc_bits: u32,
    cfg: &BenchConfig,
    trial: usize,
    rng: &mut ChaCha20Rng,
) -> Result<u64, BenchError> {
    let result: SelectionResult = match mechanism {
        Mechanism::OursCentral => {
            let params = DpParams::from_epsilon(epsilon, trunc_bits)
                .map_err(|e| BenchError::Dp(e))?;
            central_noisy_argmax(hist, &params, rng)?
        }
        Mechanism::OursIdealFunctionality => {
            let pcfg = ProtocolConfig::derive(
                epsilon,
                trunc_bits,
                3,
                1,
                40,
                hist.dims(),
                hist.weight_bound().max(1),
                0,
                0,
            )?;
            if cfg.full_protocol {
                let inputs = expand_to_one_hot(hist)?;
                let out = run_protocol(
                    &inputs,
                    &pcfg,
                    crate::protocol::run_master(cfg.seed, trial as u64),
                    &RunOptions::default(),
                )?;
                SelectionResult::evaluate(hist, out.index)
            } else {
                let out = ideal_functionality_hist(hist, &pcfg, TruncRounding::ShareWise, rng)?;
                SelectionResult::evaluate(hist, out.index)
            }
        }
        Mechanism::PermuteAndFlip => baseline_permute_and_flip(hist, epsilon, rng)?,
        Mechanism::Exponential => baseline_exponential_mechanism(hist, epsilon, rng)?,
        Mechanism::RandomizedResponse => {
            baseline_randomized_response_hist(hist, hist.weight_bound(), epsilon, rng)?
        }
        Mechanism::SecureAgg => baseline_secure_aggregation(hist, epsilon, rng)?,
        Mechanism::Uniform => {
            let i = baseline_uniform_random(hist.dims(), rng)?;
            SelectionResult::evaluate(hist, i)
        }
    };
    Ok(result.error)
}

/// Expand an aggregated histogram back into one one-hot vector per owner
/// (for runs of the full protocol). Refused above 100k owners.
pub fn expand_to_one_hot(hist: &Histogram) -> Result<Vec<Vec<u8>>, BenchError> {
    let n = hist.weight_bound();
    if n > 100_000 {
        return Err(BenchError::Config(format!(
            "full-protocol utility runs are limited to 100000 owners, data has {n}"
        )));
    }
    let mut inputs = Vec::with_capacity(n as usize);
    for (i, &count) in hist.counts().iter().enumerate() {
        for _ in 0..count {
            let mut v = vec![0u8; hist.dims()];
            v[i] = 1;
            inputs.push(v);
        }
    }
    Ok(inputs)
}

/// Transport used for the cost sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostTransport {
    /// In-memory simulator; `wall_seconds` reported as 0.
    #[default]
    Simulated,
    /// Localhost TCP; `wall_seconds` measured.
    Tcp,
}

/// Run the full protocol once per `(d, a)` grid point on synthetic
/// one-hot inputs and report transcript costs. Failures are reported per
/// point without aborting the sweep.
pub fn run_cost_sweep(
    d_grid: &[usize],
    a_grid: &[u32],
    seed: u64,
    transport: CostTransport,
) -> Result<(Vec<CostRow>, Vec<String>), BenchError> {
    if d_grid.is_empty() || a_grid.is_empty() {
        return Err(BenchError::Config("cost sweep grids must be non-empty".into()));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &d in d_grid {
        for &a in a_grid {
            match cost_point(d, a, seed, transport) {
                Ok(row) => rows.push(row),
                Err(e) => failures.push(format!("d={d} a={a}: {e}")),
            }
        }
    }
    rows.sort_by(|x, y| x.d.cmp(&y.d).then(x.a.cmp(&y.a)));
    Ok((rows, failures))
}

/// Number of synthetic owners per cost point: small and constant so even
/// the narrowest swept ring width fits the aggregate. Costs are
/// data-oblivious, so this does not affect the measured bytes or rounds.
const COST_SWEEP_OWNERS: usize = 8;

fn cost_point(
    d: usize,
    a: u32,
    seed: u64,
    transport: CostTransport,
) -> Result<CostRow, BenchError> {
    let inputs = synthetic_one_hot_inputs(d, COST_SWEEP_OWNERS, seed ^ (d as u64) << 8 ^ a as u64);
    let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, d, COST_SWEEP_OWNERS as u64, a, 1)?;
    let opts = RunOptions::default();
    let start = std::time::Instant::now();
    let outcome = match transport {
        CostTransport::Simulated => run_protocol(&inputs, &cfg, seed, &opts)?,
        CostTransport::Tcp => {
            let addrs = local_addrs(cfg.k)?;
            crate::protocol::run_protocol_tcp(&inputs, &cfg, seed, &addrs, &opts)?
        }
    };
    let wall = match transport {
        CostTransport::Simulated => 0.0,
        CostTransport::Tcp => start.elapsed().as_secs_f64(),
    };
    let agg = outcome.stats.aggregate();
    Ok(CostRow {
        d,
        a,
        online_bytes: agg.online_bytes,
        offline_bytes: agg.offline_bytes,
        rounds: agg.online_rounds,
        wall_seconds: wall,
    })
}

fn local_addrs(k: usize) -> Result<Vec<std::net::SocketAddr>, BenchError> {
    (0..k)
        .map(|_| {
            let listener = std::net::TcpListener::bind("127.0.0.1:0").map_err(|source| {
                BenchError::Io { path: PathBuf::from("127.0.0.1:0"), source }
            })?;
            listener.local_addr().map_err(|source| BenchError::Io {
                path: PathBuf::from("127.0.0.1:0"),
                source,
            })
        })
        .collect()
}
