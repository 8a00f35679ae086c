//! Command-line front end: client share emission, server endpoints, whole
//! in-process protocol runs, and the utility/cost benchmark harness.
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 on protocol aborts.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpsel::bench::{
    emit_cost_csv, emit_utility_csv, expand_to_one_hot, load_histogram, run_cost_sweep,
    run_utility_sweep, BenchConfig, BenchError, CostTransport, DataSpec, Mechanism, TruncSpec,
};
use dpsel::dp::Histogram;
use dpsel::iss::IntShareVec;
use dpsel::net::tcp::connect_mesh;
use dpsel::protocol::{
    client_share_input, party_rng, run_computing_server, run_protocol, run_supporting_server,
    PreprocMode, ProtocolConfig, ProtocolError, RunOptions, RunOutcome, SessionParams,
    StreamParty, StreamPurpose,
};

#[derive(Parser)]
#[command(name = "dpsel", version, about = "Differentially private selection over k servers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Protocol session parameters; flags mirror the config-file keys and
/// override values loaded via --config.
#[derive(Args, Clone)]
struct SessionArgs {
    /// Flat key=value config file (keys: epsilon, trunc_bits, servers,
    /// corrupt, kappa, dims, ring_bits, noise_cap_bits, seed)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trunc_bits: Option<u32>,
    #[arg(long)]
    servers: Option<usize>,
    #[arg(long)]
    corrupt: Option<usize>,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    dims: Option<usize>,
    /// Ring width for the converted shares (0 = derive)
    #[arg(long)]
    ring_bits: Option<u32>,
    /// Per-coordinate noise cap in bits (0 = derive)
    #[arg(long)]
    noise_cap_bits: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SessionArgs {
    fn resolve(&self) -> Result<SessionParams, CliError> {
        let mut params = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                SessionParams::parse(&text).map_err(validation)?
            }
            None => SessionParams::default(),
        };
        if let Some(v) = self.epsilon {
            params.epsilon = v;
        }
        if let Some(v) = self.trunc_bits {
            params.trunc_bits = v;
        }
        if let Some(v) = self.servers {
            params.servers = v;
        }
        if let Some(v) = self.corrupt {
            params.corrupt = v;
        }
        if let Some(v) = self.kappa {
            params.kappa = v;
        }
        if let Some(v) = self.dims {
            params.dims = v;
        }
        if let Some(v) = self.ring_bits {
            params.ring_bits = v;
        }
        if let Some(v) = self.noise_cap_bits {
            params.noise_cap_bits = v;
        }
        if let Some(v) = self.seed {
            params.seed = v;
        }
        Ok(params)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Secret-share owner vectors into one share file per computing server
    Share {
        #[command(flatten)]
        session: SessionArgs,
        /// Owner vectors: one line per owner, either a one-hot index or
        /// comma-separated bits
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving shares_server<i>.bin
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run one server endpoint over TCP (three-server dealer mode)
    Serve {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        server_id: u32,
        /// Comma-separated server addresses, index = server id
        #[arg(long)]
        addrs: String,
        /// Share file for this computing server (ids < h)
        #[arg(long)]
        shares: Option<PathBuf>,
        /// Number of contributing owners
        #[arg(long)]
        owners: u64,
    },
    /// Run the whole protocol in-process on the simulated transport
    RunSim {
        #[command(flatten)]
        session: SessionArgs,
        /// Histogram CSV (index,count); owners are one-hot per count unit
        #[arg(long, conflicts_with = "synthetic")]
        data: Option<PathBuf>,
        /// Synthetic data: `hepth` or `powerlaw:<d>:<max>:<shape>[:<seed>]`
        #[arg(long)]
        synthetic: Option<String>,
        /// Preprocessing mode: auto, dealer, or simulated
        #[arg(long, default_value = "auto")]
        mode: String,
    },
    /// Selection-error sweep over a privacy-budget grid, CSV out
    BenchUtility {
        #[arg(long, conflicts_with = "synthetic")]
        data: Option<PathBuf>,
        #[arg(long)]
        synthetic: Option<String>,
        /// Comma-separated privacy budgets
        #[arg(long)]
        epsilons: String,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Comma-separated mechanism names (default: all)
        #[arg(long)]
        mechanisms: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with = "alpha")]
        trunc_bits: Option<u32>,
        /// Approximation parameter selecting the truncation preset
        #[arg(long)]
        alpha: Option<f64>,
        /// Route the ideal-functionality rows through the full protocol
        #[arg(long)]
        full_protocol: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Protocol cost sweep over (d, ring_bits) grids, CSV out
    BenchCost {
        /// Comma-separated dimensions
        #[arg(long)]
        dims: String,
        /// Comma-separated ring widths
        #[arg(long)]
        ring_bits: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run over localhost TCP and report wall-clock seconds
        #[arg(long)]
        tcp: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Validation(String),
    Abort(String),
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn from_protocol(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::Config(_) | ProtocolError::Dp(_) | ProtocolError::Iss(_) => {
            CliError::Validation(e.to_string())
        }
        other => CliError::Abort(other.to_string()),
    }
}

fn from_bench(e: BenchError) -> CliError {
    match e {
        BenchError::Protocol(inner) => from_protocol(inner),
        other => CliError::Validation(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Abort(msg)) => {
            eprintln!("protocol abort: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Share { session, input, out_dir } => share(session, &input, &out_dir),
        Command::Serve { session, server_id, addrs, shares, owners } => {
            serve(session, server_id, &addrs, shares.as_deref(), owners)
        }
        Command::RunSim { session, data, synthetic, mode } => {
            run_sim(session, data.as_deref(), synthetic.as_deref(), &mode)
        }
        Command::BenchUtility {
            data,
            synthetic,
            epsilons,
            runs,
            mechanisms,
            seed,
            trunc_bits,
            alpha,
            full_protocol,
            out,
        } => bench_utility(
            data.as_deref(),
            synthetic.as_deref(),
            &epsilons,
            runs,
            mechanisms.as_deref(),
            seed,
            trunc_bits,
            alpha,
            full_protocol,
            &out,
        ),
        Command::BenchCost { dims, ring_bits, seed, tcp, out } => {
            bench_cost(&dims, &ring_bits, seed, tcp, &out)
        }
    }
}

/// Owner vectors from a text file: a bare index per line (one-hot, needs
/// --dims) or comma-separated bits.
fn parse_owner_vectors(path: &Path, dims: usize) -> Result<Vec<Vec<u8>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut owners = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |msg: String| {
            CliError::Validation(format!("{}:{}: {msg}", path.display(), lineno + 1))
        };
        if line.contains(',') {
            let bits: Result<Vec<u8>, _> =
                line.split(',').map(|f| f.trim().parse::<u8>()).collect();
            let bits = bits.map_err(|_| fail("bad bit vector".into()))?;
            if dims != 0 && bits.len() != dims {
                return Err(fail(format!("expected {dims} bits, got {}", bits.len())));
            }
            owners.push(bits);
        } else {
            if dims == 0 {
                return Err(fail("one-hot index lines need --dims".into()));
            }
            let index: usize = line.parse().map_err(|_| fail("bad index".into()))?;
            if index >= dims {
                return Err(fail(format!("index {index} outside [0, {dims})")));
            }
            let mut v = vec![0u8; dims];
            v[index] = 1;
            owners.push(v);
        }
    }
    if owners.is_empty() {
        return Err(CliError::Validation(format!("{}: no owner vectors", path.display())));
    }
    Ok(owners)
}

/// Share file layout: u32 LE owner count, u32 LE dimension, then one
/// 128-bit signed LE share per (owner, coordinate).
fn write_share_file(path: &Path, shares: &[Vec<i128>], d: usize) -> Result<(), CliError> {
    let mut bytes = Vec::with_capacity(8 + shares.len() * d * 16);
    bytes.extend_from_slice(&(shares.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    for owner in shares {
        for &s in owner {
            bytes.extend_from_slice(&s.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_share_file(path: &Path) -> Result<(usize, usize, Vec<i128>), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let fail = |msg: &str| CliError::Validation(format!("{}: {msg}", path.display()));
    if bytes.len() < 8 {
        return Err(fail("share file too short"));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 8 + n * d * 16 {
        return Err(fail("share file length does not match its header"));
    }
    let fold_len = n * d;
    let mut values = Vec::with_capacity(fold_len);
    for chunk in bytes[8..].chunks_exact(16) {
        values.push(i128::from_le_bytes(chunk.try_into().expect("16 bytes")));
    }
    Ok((n, d, values))
}

fn share(session: SessionArgs, input: &Path, out_dir: &Path) -> Result<(), CliError> {
    let params = session.resolve()?;
    let owners = parse_owner_vectors(input, params.dims)?;
    let d = owners[0].len();
    let cfg = params.to_config(d, owners.len() as u64).map_err(from_protocol)?;

    let mut per_server: Vec<Vec<Vec<i128>>> = vec![Vec::new(); cfg.h];
    for (ci, vec) in owners.iter().enumerate() {
        let mut rng =
            party_rng(params.seed, StreamParty::Client(ci as u32), StreamPurpose::Share);
        let shares: Vec<IntShareVec> =
            client_share_input(vec, &cfg, &mut rng).map_err(from_protocol)?;
        for (s, sv) in shares.into_iter().enumerate() {
            per_server[s].push(sv.shares);
        }
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Validation(format!("{}: {e}", out_dir.display())))?;
    for (s, owner_shares) in per_server.iter().enumerate() {
        let path = out_dir.join(format!("shares_server{s}.bin"));
        write_share_file(&path, owner_shares, d)?;
        println!("wrote {} ({} owners, d = {d})", path.display(), owner_shares.len());
    }
    Ok(())
}

fn parse_addrs(addrs: &str) -> Result<Vec<SocketAddr>, CliError> {
    addrs
        .split(',')
        .map(|a| {
            a.trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad address `{}`", a.trim())))
        })
        .collect()
}

fn serve(
    session: SessionArgs,
    server_id: u32,
    addrs: &str,
    shares: Option<&Path>,
    owners: u64,
) -> Result<(), CliError> {
    let params = session.resolve()?;
    let addrs = parse_addrs(addrs)?;
    if params.servers != addrs.len() {
        return Err(CliError::Validation(format!(
            "{} addresses for {} servers",
            addrs.len(),
            params.servers
        )));
    }
    if params.servers != 3 {
        return Err(CliError::Validation(
            "serve runs the three-server dealer deployment; use run-sim for k > 3".into(),
        ));
    }

    // computing servers fold the owners' share vectors; supporting ones
    // only need the dimension
    let h = params.corrupt + 1;
    let (d, fold) = if (server_id as usize) < h {
        let path = shares.ok_or_else(|| {
            CliError::Validation(format!("server {server_id} is computing and needs --shares"))
        })?;
        let (n, d, values) = read_share_file(path)?;
        if n as u64 != owners {
            return Err(CliError::Validation(format!(
                "share file has {n} owners, --owners says {owners}"
            )));
        }
        let mut fold = vec![0i128; d];
        for owner in values.chunks_exact(d) {
            for (acc, &s) in fold.iter_mut().zip(owner) {
                *acc += s;
            }
        }
        (d, Some(fold))
    } else {
        if params.dims == 0 {
            return Err(CliError::Validation("supporting servers need --dims".into()));
        }
        (params.dims, None)
    };

    let cfg = params.to_config(d, owners).map_err(from_protocol)?;
    let mut net = connect_mesh(server_id, &addrs).map_err(|e| from_protocol(e.into()))?;
    let mut noise_rng =
        party_rng(params.seed, StreamParty::Server(server_id), StreamPurpose::Noise);

    if let Some(fold) = fold {
        let run = run_computing_server(
            server_id as usize,
            &cfg,
            fold,
            None,
            &mut net,
            &mut noise_rng,
        )
        .map_err(from_protocol)?;
        println!("selected index: {}", run.index);
        println!(
            "online rounds: {}, openings observed: {}, noise resamples: {}",
            run.online_rounds,
            run.audit.openings.len(),
            run.resamples
        );
    } else {
        let mut share_rng =
            party_rng(params.seed, StreamParty::Server(server_id), StreamPurpose::Share);
        let mut preproc_rng =
            party_rng(params.seed, StreamParty::Server(server_id), StreamPurpose::Preproc);
        let run = run_supporting_server(
            server_id as usize,
            &cfg,
            server_id as usize == cfg.h,
            &mut net,
            &mut noise_rng,
            &mut share_rng,
            &mut preproc_rng,
        )
        .map_err(from_protocol)?;
        println!("supporting server done (noise resamples: {})", run.resamples);
    }
    let c = net.counters();
    println!(
        "sent: {} offline bytes, {} online bytes, {} messages",
        c.sent_offline(),
        c.sent_online(),
        c.sent_messages
    );
    Ok(())
}

fn parse_synthetic(spec: &str) -> Result<DataSpec, CliError> {
    if spec == "hepth" {
        return Ok(DataSpec::SyntheticHepth);
    }
    if let Some(rest) = spec.strip_prefix("powerlaw:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 3 || parts.len() == 4 {
            let d = parts[0].parse().map_err(|_| validation("bad powerlaw dimension"))?;
            let max_count = parts[1].parse().map_err(|_| validation("bad powerlaw max"))?;
            let shape = parts[2].parse().map_err(|_| validation("bad powerlaw shape"))?;
            let seed = if parts.len() == 4 {
                parts[3].parse().map_err(|_| validation("bad powerlaw seed"))?
            } else {
                0
            };
            return Ok(DataSpec::SyntheticPowerLaw { d, max_count, shape, seed });
        }
    }
    Err(CliError::Validation(format!(
        "unknown synthetic spec `{spec}` (use `hepth` or `powerlaw:<d>:<max>:<shape>[:<seed>]`)"
    )))
}

fn data_spec(data: Option<&Path>, synthetic: Option<&str>) -> Result<DataSpec, CliError> {
    match (data, synthetic) {
        (Some(path), None) => Ok(DataSpec::Path(path.to_path_buf())),
        (None, Some(spec)) => parse_synthetic(spec),
        (None, None) => Err(CliError::Validation("need --data or --synthetic".into())),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn run_sim(
    session: SessionArgs,
    data: Option<&Path>,
    synthetic: Option<&str>,
    mode: &str,
) -> Result<(), CliError> {
    let params = session.resolve()?;
    let hist: Histogram = data_spec(data, synthetic)?.load().map_err(from_bench)?;
    let inputs = expand_to_one_hot(&hist).map_err(from_bench)?;
    let cfg = params.to_config(hist.dims(), inputs.len() as u64).map_err(from_protocol)?;
    let mode = match mode {
        "auto" => PreprocMode::Auto,
        "dealer" => PreprocMode::Dealer,
        "simulated" => PreprocMode::Simulated,
        other => {
            return Err(CliError::Validation(format!(
                "unknown mode `{other}` (auto, dealer, simulated)"
            )))
        }
    };

    if cfg.a != cfg.heuristic_ring_bits() {
        eprintln!(
            "note: ring width {} (the n-only rule would give {}; noise and \
             comparison headroom require more)",
            cfg.a,
            cfg.heuristic_ring_bits()
        );
    }

    let opts = RunOptions { mode, ..RunOptions::default() };
    let out: RunOutcome =
        run_protocol(&inputs, &cfg, params.seed, &opts).map_err(from_protocol)?;
    let error = hist.max_count() - hist.counts()[out.index];

    println!("selected index: {}", out.index);
    println!("selection error: {error}");
    println!(
        "servers: {} ({} computing + {} supporting), ring width: {} bits, trunc: {} bits",
        cfg.k, cfg.h, cfg.t, cfg.a, cfg.c
    );
    let agg = out.stats.aggregate();
    println!(
        "offline: {} bytes / {} rounds; online: {} bytes / {} rounds; openings: {}",
        agg.offline_bytes, agg.offline_rounds, agg.online_bytes, agg.online_rounds, agg.openings
    );
    if out.transcript.resampled_draws > 0 {
        eprintln!(
            "note: {} noise draws exceeded the cap and were redrawn",
            out.transcript.resampled_draws
        );
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>, CliError> {
    list.split(',')
        .map(|f| {
            f.trim()
                .parse::<T>()
                .map_err(|_| CliError::Validation(format!("bad {what} `{}`", f.trim())))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn bench_utility(
    data: Option<&Path>,
    synthetic: Option<&str>,
    epsilons: &str,
    runs: usize,
    mechanisms: Option<&str>,
    seed: u64,
    trunc_bits: Option<u32>,
    alpha: Option<f64>,
    full_protocol: bool,
    out: &Path,
) -> Result<(), CliError> {
    let mechanisms = match mechanisms {
        Some(list) => list
            .split(',')
            .map(|name| Mechanism::from_name(name.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(from_bench)?,
        None => Mechanism::ALL.to_vec(),
    };
    let trunc = match (trunc_bits, alpha) {
        (Some(c), None) => TruncSpec::Bits(c),
        (None, Some(a)) => TruncSpec::Alpha(a),
        (None, None) => TruncSpec::Bits(0),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let cfg = BenchConfig {
        data: data_spec(data, synthetic)?,
        epsilons: parse_list(epsilons, "epsilon")?,
        runs,
        trunc,
        mechanisms,
        seed,
        full_protocol,
    };
    let rows = run_utility_sweep(&cfg).map_err(from_bench)?;
    emit_utility_csv(&rows, out).map_err(from_bench)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn bench_cost(dims: &str, ring_bits: &str, seed: u64, tcp: bool, out: &Path) -> Result<(), CliError> {
    let d_grid: Vec<usize> = parse_list(dims, "dimension")?;
    let a_grid: Vec<u32> = parse_list(ring_bits, "ring width")?;
    let transport = if tcp { CostTransport::Tcp } else { CostTransport::Simulated };
    let (rows, failures) = run_cost_sweep(&d_grid, &a_grid, seed, transport).map_err(from_bench)?;
    for failure in &failures {
        eprintln!("point failed: {failure}");
    }
    emit_cost_csv(&rows, out).map_err(from_bench)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}
