//! End-to-end execution of the selection protocol.
//!
//! Order of operations (every run): correlated-randomness preprocessing;
//! all servers sample noise; supporting servers secret-share their noise
//! to the computing servers; computing servers locally aggregate input
//! shares, received noise shares, and their own noise; truncate by `2^c`;
//! convert to `Z_{2^a}`; run the secure argmax; open the winning index.
//!
//! Parties are sequential state machines that communicate only through
//! their [`Endpoint`]s; the in-process runner puts each party on its own
//! thread over the simulator mesh. Any party failure aborts the whole run
//! with a diagnostic; there is no partial output.

use rand_chacha::ChaCha20Rng;

use crate::iss::{convert_to_ring, share_int, trunc_shares, IntShareVec, IssConfig};
use crate::mpc::{
    dealer_preprocess, index_limbs, pool_requirement, public_share,
    simulated_honest_majority_preprocess, ArgmaxAudit, ArgmaxEngine, CorrPool, PreprocessSpec,
    TaggedShare, SIMULATED_OFFLINE_ROUNDS,
};
use crate::net::{sim, Endpoint, PartyId, Phase};
use crate::ring;

use super::ideal::capped_noise_vector;
use super::streams::{party_rng, run_master, StreamParty, StreamPurpose};
use super::{ProtocolConfig, ProtocolError};

/// Transcript accounting for one server. Byte and message counts cover
/// what the server *sent*; rounds are the synchronous protocol rounds it
/// took part in; `openings` counts the public ring words it observed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartyStats {
    pub offline_bytes: u64,
    pub online_bytes: u64,
    pub offline_rounds: u64,
    pub online_rounds: u64,
    pub messages: u64,
    pub openings: u64,
}

/// Per-server stats plus the one-shot client upload volume.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptStats {
    pub per_server: Vec<PartyStats>,
    /// Bytes of client share vectors delivered to computing servers.
    pub input_bytes: u64,
}

impl TranscriptStats {
    /// Sums bytes, messages, and openings across servers; rounds are
    /// synchronous, so the aggregate reports the maximum.
    pub fn aggregate(&self) -> PartyStats {
        let mut agg = PartyStats::default();
        for s in &self.per_server {
            agg.offline_bytes += s.offline_bytes;
            agg.online_bytes += s.online_bytes;
            agg.messages += s.messages;
            agg.openings += s.openings;
            agg.offline_rounds = agg.offline_rounds.max(s.offline_rounds);
            agg.online_rounds = agg.online_rounds.max(s.online_rounds);
        }
        agg
    }
}

/// Everything recorded for post-run auditing.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub pool_generation: u64,
    /// One audit per computing server (their opened values coincide).
    pub audits: Vec<ArgmaxAudit>,
    /// Noise vectors of all `k` servers, in server order.
    pub noise_vectors: Vec<Vec<u64>>,
    /// Each computing server's aggregate integer share vector before
    /// truncation.
    pub aggregate_shares: Vec<Vec<i128>>,
    pub resampled_draws: u64,
}

/// Result of a full protocol run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub index: usize,
    pub stats: TranscriptStats,
    pub transcript: Transcript,
}

/// How the correlated randomness is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreprocMode {
    /// Dealer for `k = 3`, simulated generation otherwise.
    #[default]
    Auto,
    /// The supporting server deals (only valid for `k = 3`).
    Dealer,
    /// Locally simulated honest-majority generation with charged costs.
    Simulated,
}

impl PreprocMode {
    fn resolve(self, k: usize) -> Result<ResolvedMode, ProtocolError> {
        match self {
            PreprocMode::Auto => {
                Ok(if k == 3 { ResolvedMode::Dealer } else { ResolvedMode::Simulated })
            }
            PreprocMode::Dealer if k == 3 => Ok(ResolvedMode::Dealer),
            PreprocMode::Dealer => Err(ProtocolError::Config(format!(
                "dealer preprocessing needs k = 3, got k = {k}"
            ))),
            PreprocMode::Simulated => Ok(ResolvedMode::Simulated),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ResolvedMode {
    Dealer,
    Simulated,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mode: PreprocMode,
    /// Randomize message delivery timing (scheduling tests).
    pub jitter_seed: Option<u64>,
}

/// Secret-share one owner's binary vector for the computing servers
/// (plaintext bit width 1, plus the statistical hiding bits).
pub fn client_share_input<R: rand::Rng + ?Sized>(
    vec: &[u8],
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<Vec<IntShareVec>, ProtocolError> {
    if vec.len() != cfg.d {
        return Err(ProtocolError::Config(format!(
            "input vector has {} entries, expected {}",
            vec.len(),
            cfg.d
        )));
    }
    let mut secret = Vec::with_capacity(vec.len());
    for (index, &b) in vec.iter().enumerate() {
        if b > 1 {
            return Err(ProtocolError::Dp(crate::dp::DpError::NonBinaryEntry {
                vector: 0,
                index,
            }));
        }
        secret.push(b as i128);
    }
    let iss = IssConfig::new(cfg.h, cfg.kappa, 1)?;
    Ok(share_int(&secret, &iss, rng)?)
}

/// Fold every client's sharing into one aggregate share vector per
/// computing server, drawing from the canonical client streams.
pub fn client_fold(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
) -> Result<Vec<Vec<i128>>, ProtocolError> {
    let mut folds = vec![vec![0i128; cfg.d]; cfg.h];
    for (ci, vec) in inputs.iter().enumerate() {
        let mut rng = party_rng(master, StreamParty::Client(ci as u32), StreamPurpose::Share);
        let shares = client_share_input(vec, cfg, &mut rng)?;
        for (fold, sv) in folds.iter_mut().zip(&shares) {
            for (acc, &s) in fold.iter_mut().zip(&sv.shares) {
                *acc += s;
            }
        }
    }
    Ok(folds)
}

/// Outcome of one computing server's execution.
#[derive(Debug, Clone)]
pub struct ComputingRun {
    pub index: u64,
    pub audit: ArgmaxAudit,
    pub noise: Vec<u64>,
    pub resamples: u64,
    pub aggregate_share: Vec<i128>,
    pub pool_generation: u64,
    pub offline_rounds: u64,
    pub online_rounds: u64,
}

/// Execute one computing server (`server < h`) over `net`.
///
/// `pool`: `None` means the dealer sends it (k = 3); `Some` means it was
/// installed by the simulated preprocessing.
pub fn run_computing_server(
    server: usize,
    cfg: &ProtocolConfig,
    input_share_sum: Vec<i128>,
    pool: Option<CorrPool>,
    net: &mut Endpoint,
    noise_rng: &mut ChaCha20Rng,
) -> Result<ComputingRun, ProtocolError> {
    if input_share_sum.len() != cfg.d {
        return Err(ProtocolError::Config("input share fold has wrong dimension".into()));
    }
    let (comparisons, triples) = pool_requirement(cfg.d, cfg.a);

    // preprocessing
    let (mut pool, offline_rounds) = match pool {
        Some(p) => (p, SIMULATED_OFFLINE_ROUNDS),
        None => {
            let dealer = cfg.h as PartyId;
            let frame = net.recv(dealer, Phase::Preproc)?;
            (CorrPool::from_le_bytes(&frame.payload)?, 1)
        }
    };
    if pool.ring_bits != cfg.a
        || pool.edabits_total() < comparisons
        || pool.triples_total() < triples
    {
        return Err(ProtocolError::Config(format!(
            "preprocessing pool undersized: {} edabits / {} triples for d = {}, a = {}",
            pool.edabits_total(),
            pool.triples_total(),
            cfg.d,
            cfg.a
        )));
    }
    let pool_generation = pool.generation;

    // own noise
    let (noise, resamples) = capped_noise_vector(cfg, noise_rng)?;

    // noise shares from the supporting servers (one round)
    let mut aggregate = input_share_sum;
    for supporter in cfg.h..cfg.k {
        let frame = net.recv(supporter as PartyId, Phase::NoiseShare)?;
        let sv = IntShareVec::from_le_bytes(server, &frame.payload)?;
        if sv.len() != cfg.d {
            return Err(ProtocolError::Config(format!(
                "noise share from server {supporter} has {} entries, expected {}",
                sv.len(),
                cfg.d
            )));
        }
        for (acc, &s) in aggregate.iter_mut().zip(&sv.shares) {
            *acc += s;
        }
    }
    for (acc, &v) in aggregate.iter_mut().zip(&noise) {
        *acc += v as i128;
    }

    // local truncation, ring conversion, positivity offset
    let int_shares = IntShareVec { server_id: server, shares: aggregate.clone() };
    let truncated = trunc_shares(&int_shares, cfg.c);
    let ring_shares = convert_to_ring(&truncated, cfg.a);
    let offset = public_share(cfg.positivity_offset(), server, cfg.a);
    let limbs = index_limbs(cfg.d, cfg.a);
    let items: Vec<TaggedShare> = ring_shares
        .shares
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            TaggedShare::new(ring::add(v, offset, cfg.a), i as u64, server, cfg.a, limbs)
        })
        .collect();

    // secure argmax and the final opening
    let mut engine = ArgmaxEngine::new(server, cfg.h, &mut pool, net)?;
    let index = engine.secure_argmax(&items)?;
    let audit = engine.finish();
    let online_rounds = 1 + audit.rounds;

    Ok(ComputingRun {
        index,
        audit,
        noise,
        resamples,
        aggregate_share: aggregate,
        pool_generation,
        offline_rounds,
        online_rounds,
    })
}

/// Outcome of one supporting server's execution.
#[derive(Debug, Clone)]
pub struct SupportingRun {
    pub noise: Vec<u64>,
    pub resamples: u64,
    pub pool_generation: Option<u64>,
    pub offline_rounds: u64,
    pub online_rounds: u64,
}

/// Execute one supporting server (`server >= h`) over `net`. When `deal`
/// is set (three-server mode, first supporting server) it generates and
/// distributes the correlated randomness.
pub fn run_supporting_server(
    _server: usize,
    cfg: &ProtocolConfig,
    deal: bool,
    net: &mut Endpoint,
    noise_rng: &mut ChaCha20Rng,
    share_rng: &mut ChaCha20Rng,
    preproc_rng: &mut ChaCha20Rng,
) -> Result<SupportingRun, ProtocolError> {
    let mut pool_generation = None;
    let offline_rounds = if deal {
        let spec = PreprocessSpec::for_dimension(cfg.h, cfg.k, cfg.a, cfg.d);
        let pools = dealer_preprocess(&spec, preproc_rng)?;
        pool_generation = Some(pools[0].generation);
        for (s, pool) in pools.iter().enumerate() {
            net.send(s as PartyId, Phase::Preproc, pool.to_le_bytes())?;
        }
        1
    } else {
        SIMULATED_OFFLINE_ROUNDS
    };

    let (noise, resamples) = capped_noise_vector(cfg, noise_rng)?;
    let secret: Vec<i128> = noise.iter().map(|&v| v as i128).collect();
    let iss = IssConfig::new(cfg.h, cfg.kappa, cfg.noise_cap_bits.max(1))?;
    let shares = share_int(&secret, &iss, share_rng)?;
    for (s, sv) in shares.iter().enumerate() {
        net.send(s as PartyId, Phase::NoiseShare, sv.to_le_bytes())?;
    }

    Ok(SupportingRun {
        noise,
        resamples,
        pool_generation,
        offline_rounds,
        online_rounds: 1,
    })
}

enum ServerOutcome {
    Computing(ComputingRun, crate::net::TrafficCounters),
    Supporting(SupportingRun, crate::net::TrafficCounters),
}

/// One server's complete execution for a single run: derive streams, run
/// the role-appropriate executor, and snapshot the traffic counters.
#[allow(clippy::too_many_arguments)]
fn server_task(
    server: usize,
    cfg: &ProtocolConfig,
    mode: ResolvedMode,
    fold: Vec<i128>,
    pool: Option<CorrPool>,
    net: &mut Endpoint,
    master: u64,
    noise_master: u64,
) -> Result<ServerOutcome, ProtocolError> {
    let mut noise_rng =
        party_rng(noise_master, StreamParty::Server(server as u32), StreamPurpose::Noise);
    if server < cfg.h {
        let run = run_computing_server(server, cfg, fold, pool, net, &mut noise_rng)?;
        Ok(ServerOutcome::Computing(run, *net.counters()))
    } else {
        let mut share_rng =
            party_rng(master, StreamParty::Server(server as u32), StreamPurpose::Share);
        let mut preproc_rng =
            party_rng(master, StreamParty::Server(server as u32), StreamPurpose::Preproc);
        let deal = mode == ResolvedMode::Dealer && server == cfg.h;
        let run = run_supporting_server(
            server,
            cfg,
            deal,
            net,
            &mut noise_rng,
            &mut share_rng,
            &mut preproc_rng,
        )?;
        Ok(ServerOutcome::Supporting(run, *net.counters()))
    }
}

/// Pools for the simulated preprocessing mode, drawn from the canonical
/// preprocessing stream, plus the per-server charged bytes.
fn simulated_pools(
    cfg: &ProtocolConfig,
    master: u64,
) -> Result<(Vec<CorrPool>, u64), ProtocolError> {
    let spec = PreprocessSpec::for_dimension(cfg.h, cfg.k, cfg.a, cfg.d);
    let mut rng = party_rng(master, StreamParty::Server(cfg.h as u32), StreamPurpose::Preproc);
    let sim = simulated_honest_majority_preprocess(&spec, &mut rng)?;
    Ok((sim.pools, sim.charged_bytes_per_server))
}

/// Run the whole protocol in-process on the simulator mesh, one thread
/// per server, with every party's randomness derived from `master`.
pub fn run_protocol(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
    opts: &RunOptions,
) -> Result<RunOutcome, ProtocolError> {
    run_protocol_pinned(inputs, cfg, master, opts, &[])
}

/// [`run_protocol`] with selected servers' noise streams pinned to fixed
/// masters (conditioning for privacy tests).
pub fn run_protocol_pinned(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
    opts: &RunOptions,
    pinned_noise: &[(usize, u64)],
) -> Result<RunOutcome, ProtocolError> {
    if inputs.len() as u64 != cfg.n {
        return Err(ProtocolError::Config(format!(
            "{} input vectors but the config says n = {}",
            inputs.len(),
            cfg.n
        )));
    }
    let mode = opts.mode.resolve(cfg.k)?;
    let folds = client_fold(inputs, cfg, master)?;
    let input_bytes = (cfg.n as u64) * (cfg.d as u64) * 16 * cfg.h as u64;

    let mut sim_pools: Vec<Option<CorrPool>> = vec![None; cfg.h];
    let mut charged_offline: Option<u64> = None;
    if mode == ResolvedMode::Simulated {
        let (pools, charged) = simulated_pools(cfg, master)?;
        charged_offline = Some(charged);
        for (slot, pool) in sim_pools.iter_mut().zip(pools) {
            *slot = Some(pool);
        }
    }

    let endpoints = match opts.jitter_seed {
        Some(seed) => sim::mesh_with_jitter(cfg.k, seed),
        None => sim::mesh(cfg.k),
    };

    let noise_master = |server: usize| {
        pinned_noise.iter().find(|(s, _)| *s == server).map(|&(_, m)| m).unwrap_or(master)
    };

    let mut results: Vec<Option<Result<ServerOutcome, ProtocolError>>> = Vec::new();
    for _ in 0..cfg.k {
        results.push(None);
    }
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut endpoints = endpoints;
        // spawn in reverse so we can pop endpoints by id
        for server in (0..cfg.k).rev() {
            let mut net = endpoints.pop().expect("endpoint per server");
            let fold = if server < cfg.h { folds[server].clone() } else { Vec::new() };
            let pool = if server < cfg.h { sim_pools[server].take() } else { None };
            let cfg = *cfg;
            let nm = noise_master(server);
            handles.push((
                server,
                scope.spawn(move || {
                    server_task(server, &cfg, mode, fold, pool, &mut net, master, nm)
                }),
            ));
        }
        for (server, handle) in handles {
            results[server] = Some(match handle.join() {
                Ok(res) => res,
                Err(_) => Err(ProtocolError::Aborted {
                    server,
                    reason: "server thread panicked".into(),
                }),
            });
        }
    });

    assemble_outcome(cfg, results, charged_offline, input_bytes)
}

/// Run the whole protocol over localhost TCP, one thread per server, with
/// the same frame format and accounting as the simulator.
pub fn run_protocol_tcp(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
    addrs: &[std::net::SocketAddr],
    opts: &RunOptions,
) -> Result<RunOutcome, ProtocolError> {
    if inputs.len() as u64 != cfg.n {
        return Err(ProtocolError::Config(format!(
            "{} input vectors but the config says n = {}",
            inputs.len(),
            cfg.n
        )));
    }
    if addrs.len() != cfg.k {
        return Err(ProtocolError::Config(format!(
            "{} addresses for {} servers",
            addrs.len(),
            cfg.k
        )));
    }
    let mode = opts.mode.resolve(cfg.k)?;
    let folds = client_fold(inputs, cfg, master)?;
    let input_bytes = (cfg.n as u64) * (cfg.d as u64) * 16 * cfg.h as u64;

    let mut sim_pools: Vec<Option<CorrPool>> = vec![None; cfg.h];
    let mut charged_offline: Option<u64> = None;
    if mode == ResolvedMode::Simulated {
        let (pools, charged) = simulated_pools(cfg, master)?;
        charged_offline = Some(charged);
        for (slot, pool) in sim_pools.iter_mut().zip(pools) {
            *slot = Some(pool);
        }
    }

    let mut results: Vec<Option<Result<ServerOutcome, ProtocolError>>> = Vec::new();
    for _ in 0..cfg.k {
        results.push(None);
    }
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for server in (0..cfg.k).rev() {
            let fold = if server < cfg.h { folds[server].clone() } else { Vec::new() };
            let pool = if server < cfg.h { sim_pools[server].take() } else { None };
            let cfg = *cfg;
            let addrs = addrs.to_vec();
            handles.push((
                server,
                scope.spawn(move || {
                    let mut net = crate::net::tcp::connect_mesh(server as PartyId, &addrs)?;
                    server_task(server, &cfg, mode, fold, pool, &mut net, master, master)
                }),
            ));
        }
        for (server, handle) in handles {
            results[server] = Some(match handle.join() {
                Ok(res) => res,
                Err(_) => Err(ProtocolError::Aborted {
                    server,
                    reason: "server thread panicked".into(),
                }),
            });
        }
    });

    assemble_outcome(cfg, results, charged_offline, input_bytes)
}

fn assemble_outcome(
    cfg: &ProtocolConfig,
    results: Vec<Option<Result<ServerOutcome, ProtocolError>>>,
    charged_offline: Option<u64>,
    input_bytes: u64,
) -> Result<RunOutcome, ProtocolError> {
    let mut outcomes = Vec::with_capacity(cfg.k);
    for (server, slot) in results.into_iter().enumerate() {
        match slot.expect("every server joined") {
            Ok(out) => outcomes.push(out),
            Err(e) => {
                return Err(ProtocolError::Aborted { server, reason: e.to_string() });
            }
        }
    }

    let mut index: Option<u64> = None;
    let mut per_server = Vec::with_capacity(cfg.k);
    let mut audits = Vec::new();
    let mut noise_vectors = Vec::with_capacity(cfg.k);
    let mut aggregate_shares = Vec::new();
    let mut pool_generation = 0u64;
    let mut resampled = 0u64;

    for outcome in outcomes {
        match outcome {
            ServerOutcome::Computing(run, counters) => {
                match index {
                    None => index = Some(run.index),
                    Some(prev) if prev == run.index => {}
                    Some(prev) => {
                        return Err(ProtocolError::Internal(format!(
                            "computing servers disagree on the output ({prev} vs {})",
                            run.index
                        )))
                    }
                }
                pool_generation = run.pool_generation;
                resampled += run.resamples;
                per_server.push(PartyStats {
                    offline_bytes: charged_offline
                        .unwrap_or(counters.sent_offline()),
                    online_bytes: counters.sent_online(),
                    offline_rounds: run.offline_rounds,
                    online_rounds: run.online_rounds,
                    messages: counters.sent_messages,
                    openings: run
                        .audit
                        .openings
                        .iter()
                        .map(|o| o.values.len() as u64)
                        .sum(),
                });
                noise_vectors.push(run.noise);
                aggregate_shares.push(run.aggregate_share);
                audits.push(run.audit);
            }
            ServerOutcome::Supporting(run, counters) => {
                resampled += run.resamples;
                per_server.push(PartyStats {
                    offline_bytes: charged_offline
                        .unwrap_or(counters.sent_offline()),
                    online_bytes: counters.sent_online(),
                    offline_rounds: run.offline_rounds,
                    online_rounds: run.online_rounds,
                    messages: counters.sent_messages,
                    openings: 0,
                });
                noise_vectors.push(run.noise);
                let _ = run.pool_generation;
            }
        }
    }

    let index = index.ok_or_else(|| ProtocolError::Internal("no computing output".into()))?;
    let opened = index as usize;
    if opened >= cfg.d {
        return Err(ProtocolError::Internal(format!(
            "opened index {opened} outside [0, {})",
            cfg.d
        )));
    }
    Ok(RunOutcome {
        index: opened,
        stats: TranscriptStats { per_server, input_bytes },
        transcript: Transcript {
            pool_generation,
            audits,
            noise_vectors,
            aggregate_shares,
            resampled_draws: resampled,
        },
    })
}

/// Options for [`run_protocol_batch`].
#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub mode: PreprocMode,
    /// Servers whose noise stream is pinned to a fixed master across all
    /// runs (conditioning on a fixed leaked value).
    pub pin_noise: Vec<(usize, u64)>,
}

/// Run the protocol `runs` times on fixed inputs over persistent party
/// threads and channels, returning the opened index per run. Run `r` uses
/// the derived master `run_master(master, r)`; pinned noise streams stay
/// fixed across runs.
pub fn run_protocol_batch(
    inputs: &[Vec<u8>],
    cfg: &ProtocolConfig,
    master: u64,
    runs: usize,
    opts: &BatchOptions,
) -> Result<Vec<usize>, ProtocolError> {
    if inputs.len() as u64 != cfg.n {
        return Err(ProtocolError::Config(format!(
            "{} input vectors but the config says n = {}",
            inputs.len(),
            cfg.n
        )));
    }
    let mode = opts.mode.resolve(cfg.k)?;
    let endpoints = sim::mesh(cfg.k);
    let spec = PreprocessSpec::for_dimension(cfg.h, cfg.k, cfg.a, cfg.d);

    let mut per_server_indices: Vec<Option<Result<Vec<u64>, ProtocolError>>> = Vec::new();
    for _ in 0..cfg.k {
        per_server_indices.push(None);
    }

    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut endpoints = endpoints;
        for server in (0..cfg.k).rev() {
            let mut net = endpoints.pop().expect("endpoint per server");
            let cfg = *cfg;
            let opts = opts.clone();
            let inputs = inputs.to_vec();
            handles.push((
                server,
                scope.spawn(move || -> Result<Vec<u64>, ProtocolError> {
                    let mut indices = Vec::with_capacity(runs);
                    for r in 0..runs {
                        let rm = run_master(master, r as u64);
                        let nm = opts
                            .pin_noise
                            .iter()
                            .find(|(s, _)| *s == server)
                            .map(|&(_, m)| m)
                            .unwrap_or(rm);
                        let mut noise_rng = party_rng(
                            nm,
                            StreamParty::Server(server as u32),
                            StreamPurpose::Noise,
                        );
                        if server < cfg.h {
                            let fold = client_fold(&inputs, &cfg, rm)?;
                            let pool = if mode == ResolvedMode::Simulated {
                                let mut rng = party_rng(
                                    rm,
                                    StreamParty::Server(cfg.h as u32),
                                    StreamPurpose::Preproc,
                                );
                                let sim = simulated_honest_majority_preprocess(&spec, &mut rng)?;
                                Some(sim.pools.into_iter().nth(server).expect("pool per server"))
                            } else {
                                None
                            };
                            let run = run_computing_server(
                                server,
                                &cfg,
                                fold.into_iter().nth(server).expect("fold per server"),
                                pool,
                                &mut net,
                                &mut noise_rng,
                            )?;
                            indices.push(run.index);
                        } else {
                            let mut share_rng = party_rng(
                                rm,
                                StreamParty::Server(server as u32),
                                StreamPurpose::Share,
                            );
                            let mut preproc_rng = party_rng(
                                rm,
                                StreamParty::Server(server as u32),
                                StreamPurpose::Preproc,
                            );
                            let deal = mode == ResolvedMode::Dealer && server == cfg.h;
                            run_supporting_server(
                                server,
                                &cfg,
                                deal,
                                &mut net,
                                &mut noise_rng,
                                &mut share_rng,
                                &mut preproc_rng,
                            )?;
                        }
                    }
                    Ok(indices)
                }),
            ));
        }
        for (server, handle) in handles {
            per_server_indices[server] = Some(match handle.join() {
                Ok(res) => res,
                Err(_) => Err(ProtocolError::Aborted {
                    server,
                    reason: "server thread panicked".into(),
                }),
            });
        }
    });

    let mut computing = Vec::new();
    for (server, slot) in per_server_indices.into_iter().enumerate() {
        match slot.expect("joined") {
            Ok(indices) => {
                if server < cfg.h {
                    computing.push(indices);
                }
            }
            Err(e) => return Err(ProtocolError::Aborted { server, reason: e.to_string() }),
        }
    }
    let first = computing.first().ok_or_else(|| {
        ProtocolError::Internal("no computing output".into())
    })?;
    for other in &computing[1..] {
        if other != first {
            return Err(ProtocolError::Internal(
                "computing servers disagree on batch outputs".into(),
            ));
        }
    }
    Ok(first.iter().map(|&i| i as usize).collect())
}
