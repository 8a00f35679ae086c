//! End-to-end protocol runs over the simulator and TCP: correctness in
//! the noiseless limit, seeded protocol/oracle equivalence, transcript
//! accounting, scheduling independence, the corrupted-view audit, and
//! abort behavior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use dpsel::dp::Histogram;
use dpsel::iss::reconstruct_int;
use dpsel::net::{sim, NetError, Phase};
use dpsel::protocol::{
    audit_corrupted_view, check_randomness_freshness, check_share_hiding, client_fold,
    client_share_input, ideal_functionality_seeded, party_rng, run_computing_server, run_master,
    run_protocol, run_protocol_batch, run_protocol_tcp, BatchOptions, PreprocMode,
    ProtocolConfig, ProtocolError, RunOptions, SessionParams, StreamParty, StreamPurpose,
};

fn one_hot(d: usize, i: usize) -> Vec<u8> {
    let mut v = vec![0u8; d];
    v[i] = 1;
    v
}

fn random_inputs(d: usize, n: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<u8>> {
    (0..n).map(|_| one_hot(d, rng.random_range(0..d))).collect()
}

fn cfg_for(inputs: &[Vec<u8>], epsilon: f64, c: u32) -> ProtocolConfig {
    ProtocolConfig::derive(epsilon, c, 3, 1, 40, inputs[0].len(), inputs.len() as u64, 0, 0)
        .unwrap()
}

#[test]
fn client_shares_reconstruct() {
    let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, 6, 10, 0, 0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    let zero = vec![0u8; 6];
    let shares = client_share_input(&zero, &cfg, &mut rng).unwrap();
    assert_eq!(reconstruct_int(&shares).unwrap(), vec![0i128; 6]);

    for _ in 0..1000 {
        let v = one_hot(6, rng.random_range(0..6));
        let shares = client_share_input(&v, &cfg, &mut rng).unwrap();
        let plain: Vec<i128> = v.iter().map(|&b| b as i128).collect();
        assert_eq!(reconstruct_int(&shares).unwrap(), plain);
    }

    assert!(client_share_input(&[0, 2, 0, 0, 0, 0], &cfg, &mut rng).is_err());
    assert!(client_share_input(&[0, 1], &cfg, &mut rng).is_err());
}

#[test]
fn noiseless_limit_recovers_plaintext_argmax() {
    // epsilon large enough that p rounds to 1 and all noise is zero
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for trial in 0..200u64 {
        let inputs = random_inputs(4, 5, &mut rng);
        let hist = Histogram::from_binary_vectors(&inputs).unwrap();
        let cfg = cfg_for(&inputs, 80.0, 0);
        let out = run_protocol(&inputs, &cfg, trial, &RunOptions::default()).unwrap();
        assert_eq!(out.index, hist.argmax(), "trial {trial}");
    }
}

#[test]
fn protocol_equals_seeded_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for trial in 0..100u64 {
        let d = rng.random_range(2..=32usize);
        let n = rng.random_range(1..=24usize);
        let inputs = random_inputs(d, n, &mut rng);
        let cfg = cfg_for(&inputs, 1.0, rng.random_range(0..3));
        let master = 5000 + trial;
        let protocol = run_protocol(&inputs, &cfg, master, &RunOptions::default()).unwrap();
        let oracle = ideal_functionality_seeded(&inputs, &cfg, master, &[]).unwrap();
        assert_eq!(protocol.index, oracle.index, "trial {trial} d={d} n={n}");
    }
}

#[test]
fn batch_runs_match_individual_runs() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let inputs = random_inputs(8, 6, &mut rng);
    let cfg = cfg_for(&inputs, 0.7, 1);
    let master = 99;
    let batch =
        run_protocol_batch(&inputs, &cfg, master, 20, &BatchOptions::default()).unwrap();
    for (r, &index) in batch.iter().enumerate() {
        let single =
            run_protocol(&inputs, &cfg, run_master(master, r as u64), &RunOptions::default())
                .unwrap();
        assert_eq!(single.index, index, "run {r}");
    }
}

#[test]
fn results_are_interleaving_independent() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let inputs = random_inputs(8, 6, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);
    let baseline = run_protocol(&inputs, &cfg, 7, &RunOptions::default()).unwrap();
    for jitter in 0..5u64 {
        let opts = RunOptions { jitter_seed: Some(jitter), ..RunOptions::default() };
        let jittered = run_protocol(&inputs, &cfg, 7, &opts).unwrap();
        assert_eq!(jittered.index, baseline.index, "jitter {jitter}");
        assert_eq!(
            jittered.stats.aggregate().online_bytes,
            baseline.stats.aggregate().online_bytes
        );
    }
}

#[test]
fn online_bytes_double_with_dimension() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut bytes_at = |d: usize| -> u64 {
        let inputs = random_inputs(d, 8, &mut rng);
        let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, d, 8, 12, 0).unwrap();
        let out = run_protocol(&inputs, &cfg, 11, &RunOptions::default()).unwrap();
        out.stats.aggregate().online_bytes
    };
    let small = bytes_at(256);
    let large = bytes_at(512);
    let ratio = large as f64 / small as f64;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn round_counts_follow_the_formula() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for (d, a) in [(4usize, 8u32), (16, 10), (33, 12)] {
        let inputs = random_inputs(d, 6, &mut rng);
        let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, d, 6, a, 0).unwrap();
        let out = run_protocol(&inputs, &cfg, 13, &RunOptions::default()).unwrap();
        let expected = 1 + dpsel::mpc::argmax_rounds(d, a);
        for server in 0..cfg.h {
            assert_eq!(out.stats.per_server[server].online_rounds, expected, "d={d} a={a}");
        }
        assert_eq!(out.stats.per_server[cfg.h].online_rounds, 1);
    }
}

#[test]
fn simulated_preprocessing_for_five_servers() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let inputs = random_inputs(8, 6, &mut rng);
    let hist = Histogram::from_binary_vectors(&inputs).unwrap();
    let cfg = ProtocolConfig::derive(60.0, 0, 5, 2, 40, 8, 6, 0, 0).unwrap();
    let out = run_protocol(&inputs, &cfg, 17, &RunOptions::default()).unwrap();
    assert_eq!(out.index, hist.argmax());
    // charged offline bytes, equal per server, constant rounds
    let s0 = out.stats.per_server[0];
    assert!(s0.offline_bytes > 0);
    for s in &out.stats.per_server {
        assert_eq!(s.offline_bytes, s0.offline_bytes);
        assert_eq!(s.offline_rounds, dpsel::mpc::SIMULATED_OFFLINE_ROUNDS);
    }
}

#[test]
fn dealer_mode_requires_three_servers() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let inputs = random_inputs(4, 4, &mut rng);
    let cfg = ProtocolConfig::derive(1.0, 0, 5, 2, 40, 4, 4, 0, 0).unwrap();
    let opts = RunOptions { mode: PreprocMode::Dealer, ..RunOptions::default() };
    assert!(matches!(
        run_protocol(&inputs, &cfg, 1, &opts),
        Err(ProtocolError::Config(_))
    ));
}

#[test]
fn audit_counts_openings_for_corrupted_computing_server() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let d = 16;
    let inputs = random_inputs(d, 6, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);
    let out = run_protocol(&inputs, &cfg, 21, &RunOptions::default()).unwrap();

    let view = audit_corrupted_view(&out, &cfg, &[0]).unwrap();
    assert_eq!(view.masked_openings, d - 1);
    assert_eq!(view.final_openings, 1);
    assert!(!view.sees_preprocessing_plaintext);
    assert_eq!(view.leakage.corrupted_ids, vec![0]);
    assert_eq!(view.leakage.leaked_noise.len(), 1);

    // corrupted supporting server: own noise and preprocessing plaintext only
    let view = audit_corrupted_view(&out, &cfg, &[2]).unwrap();
    assert_eq!(view.masked_openings, 0);
    assert_eq!(view.final_openings, 0);
    assert!(view.sees_preprocessing_plaintext);
    assert_eq!(view.leakage.corrupted_ids, vec![2]);

    // empty corruption: empty leakage
    let view = audit_corrupted_view(&out, &cfg, &[]).unwrap();
    assert!(view.leakage.corrupted_ids.is_empty());
    assert!(view.leakage.leaked_noise.is_empty());

    // bound enforcement
    assert!(audit_corrupted_view(&out, &cfg, &[0, 1]).is_err());
    assert!(audit_corrupted_view(&out, &cfg, &[7]).is_err());
}

#[test]
fn corrupted_share_view_is_input_independent() {
    // same seeds, different inputs: the non-final computing server sees
    // bit-identical aggregate shares; the final one sees a translate by
    // exactly the plaintext difference
    let d = 8;
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let real = random_inputs(d, 5, &mut rng);
    let mut dummy = real.clone();
    dummy[2] = vec![0u8; d]; // one owner's vector zeroed
    let cfg = cfg_for(&real, 1.0, 1);

    let run_real = run_protocol(&real, &cfg, 31, &RunOptions::default()).unwrap();
    let run_dummy = run_protocol(&dummy, &cfg, 31, &RunOptions::default()).unwrap();

    let hist_real = Histogram::from_binary_vectors(&real).unwrap();
    let hist_dummy = Histogram::from_binary_vectors(&dummy).unwrap();
    let delta: Vec<i128> = hist_real
        .counts()
        .iter()
        .zip(hist_dummy.counts())
        .map(|(&a, &b)| a as i128 - b as i128)
        .collect();

    assert!(check_share_hiding(&run_real, &run_dummy, &cfg, &delta, 0));
    assert!(check_share_hiding(&run_real, &run_dummy, &cfg, &delta, 1));
}

#[test]
fn randomness_is_fresh_across_runs() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let inputs = random_inputs(8, 4, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);
    let runs: Vec<_> = (0..20u64)
        .map(|r| run_protocol(&inputs, &cfg, 1000 + r, &RunOptions::default()).unwrap())
        .collect();
    let refs: Vec<&_> = runs.iter().collect();
    assert!(check_randomness_freshness(&refs));
}

#[test]
fn killed_connection_aborts_without_output() {
    // supporting server drops out after preprocessing: both computing
    // servers must surface an abort, not a wrong answer
    let cfg = ProtocolConfig::derive(1.0, 0, 3, 1, 40, 4, 3, 0, 0).unwrap();
    let inputs = vec![one_hot(4, 0), one_hot(4, 1), one_hot(4, 0)];
    let folds = client_fold(&inputs, &cfg, 77).unwrap();

    let mut endpoints = sim::mesh(3);
    let supporting = endpoints.pop().unwrap();
    let ep1 = endpoints.pop().unwrap();
    let ep0 = endpoints.pop().unwrap();

    std::thread::scope(|scope| {
        let cfg0 = cfg;
        let fold0 = folds[0].clone();
        let h0 = scope.spawn(move || {
            let mut net = ep0;
            let mut noise = party_rng(77, StreamParty::Server(0), StreamPurpose::Noise);
            run_computing_server(0, &cfg0, fold0, None, &mut net, &mut noise)
        });
        let fold1 = folds[1].clone();
        let h1 = scope.spawn(move || {
            let mut net = ep1;
            let mut noise = party_rng(77, StreamParty::Server(1), StreamPurpose::Noise);
            run_computing_server(1, &cfg0, fold1, None, &mut net, &mut noise)
        });
        // the supporting server vanishes before sending anything
        drop(supporting);
        let r0 = h0.join().unwrap();
        let r1 = h1.join().unwrap();
        assert!(matches!(r0, Err(ProtocolError::Net(NetError::Disconnected(2)))), "{r0:?}");
        assert!(matches!(r1, Err(ProtocolError::Net(NetError::Disconnected(2)))), "{r1:?}");
    });
}

#[test]
fn tcp_run_matches_simulator() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let inputs = random_inputs(8, 5, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);

    let sim_out = run_protocol(&inputs, &cfg, 41, &RunOptions::default()).unwrap();

    let addrs: Vec<std::net::SocketAddr> = (0..3)
        .map(|_| {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap()
        })
        .collect();
    let tcp_out = run_protocol_tcp(&inputs, &cfg, 41, &addrs, &RunOptions::default()).unwrap();

    assert_eq!(tcp_out.index, sim_out.index);
    // identical frames, identical accounting
    assert_eq!(
        tcp_out.stats.aggregate().online_bytes,
        sim_out.stats.aggregate().online_bytes
    );
    assert_eq!(
        tcp_out.stats.aggregate().offline_bytes,
        sim_out.stats.aggregate().offline_bytes
    );
}

#[test]
fn session_params_drive_a_full_run() {
    let text = "epsilon=1.0\nservers=3\ncorrupt=1\ntrunc_bits=1\nseed=5\n";
    let params = SessionParams::parse(text).unwrap();
    let inputs = vec![one_hot(4, 1), one_hot(4, 1), one_hot(4, 3)];
    let cfg = params.to_config(4, inputs.len() as u64).unwrap();
    let out = run_protocol(&inputs, &cfg, params.seed, &RunOptions::default()).unwrap();
    assert!(out.index < 4);
    // noise-share phase exists: each supporting server sent d i128 words
    let supporting = out.stats.per_server[cfg.h];
    assert!(supporting.online_bytes >= (cfg.d * 16) as u64);
}

#[test]
fn transcript_stats_aggregate_sums_bytes() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    let inputs = random_inputs(8, 4, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);
    let out = run_protocol(&inputs, &cfg, 51, &RunOptions::default()).unwrap();
    let agg = out.stats.aggregate();
    assert_eq!(
        agg.online_bytes,
        out.stats.per_server.iter().map(|s| s.online_bytes).sum::<u64>()
    );
    assert_eq!(
        agg.messages,
        out.stats.per_server.iter().map(|s| s.messages).sum::<u64>()
    );
    assert!(agg.openings > 0);
    assert!(out.stats.input_bytes > 0);
}

/// Openings per frame phase: preprocessing only flows dealer -> computing.
#[test]
fn phase_traffic_shape() {
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let inputs = random_inputs(4, 4, &mut rng);
    let cfg = cfg_for(&inputs, 1.0, 0);
    let out = run_protocol(&inputs, &cfg, 61, &RunOptions::default()).unwrap();
    // dealer (server 2) sends offline bytes, the computing servers none
    assert_eq!(out.stats.per_server[0].offline_bytes, 0);
    assert_eq!(out.stats.per_server[1].offline_bytes, 0);
    assert!(out.stats.per_server[2].offline_bytes > 0);
    let _ = Phase::Preproc;
}
