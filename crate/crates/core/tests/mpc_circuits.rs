//! Exhaustive and randomized checks of the secure comparison, selection,
//! and tournament argmax against their plaintext oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use dpsel::mpc::{
    argmax_rounds, dealer_preprocess, pool_requirement, ArgmaxAudit, ArgmaxEngine,
    CorrPool, OpenKind, PreprocessSpec, TaggedShare,
};
use dpsel::net::sim;

const H: usize = 2;

/// Run the same closure as both computing servers over a fresh two-party
/// mesh with pools sized for `comparisons`, returning each party's result.
fn run_two_party<T, F>(a: u32, comparisons: usize, seed: u64, f: F) -> Vec<(T, ArgmaxAudit)>
where
    T: Send,
    F: Fn(usize, &mut ArgmaxEngine) -> T + Sync,
{
    let spec = PreprocessSpec { h: H, k: 3, ring_bits: a, comparisons, index_limbs: 2 };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pools = dealer_preprocess(&spec, &mut rng).unwrap();
    let mut endpoints = sim::mesh(H);
    endpoints.reverse();

    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (party, mut pool) in pools.into_iter().enumerate() {
            let mut net = endpoints.pop().unwrap();
            let f = &f;
            handles.push(scope.spawn(move || {
                let mut engine = ArgmaxEngine::new(party, H, &mut pool, &mut net).unwrap();
                let out = f(party, &mut engine);
                (out, engine.finish())
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

/// Additively share `value` between the two parties, seeded per call.
fn share_pair(value: u64, a: u32, rng: &mut ChaCha20Rng) -> [u64; 2] {
    let s0 = rng.random_range(0..(1u64 << a));
    [s0, value.wrapping_sub(s0) & ((1 << a) - 1)]
}

fn open_pair(shares: [u64; 2], a: u32) -> u64 {
    shares[0].wrapping_add(shares[1]) & ((1 << a) - 1)
}

#[test]
fn secure_lt_matches_unsigned_comparison_exhaustively() {
    // a = 6: all pairs (u, v) in [0, 32)^2, including every tie
    let a = 6u32;
    let half = 1u64 << (a - 1);
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut cases = Vec::new();
    for u in 0..half {
        for v in 0..half {
            cases.push((u, share_pair(u, a, &mut rng), v, share_pair(v, a, &mut rng)));
        }
    }
    let cases = &cases;
    let results = run_two_party(a, cases.len(), 1, |party, engine| {
        cases
            .iter()
            .map(|&(_, us, _, vs)| engine.secure_lt(us[party], vs[party]).unwrap())
            .collect::<Vec<u64>>()
    });
    for (i, &(u, _, v, _)) in cases.iter().enumerate() {
        let bit = open_pair([results[0].0[i], results[1].0[i]], a);
        assert_eq!(bit, u64::from(u < v), "u={u} v={v}");
    }
}

#[test]
fn secure_mux_selects_by_bit() {
    let a = 8u32;
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    let mut cases = Vec::new();
    for _ in 0..1000 {
        let b = rng.random_range(0..2u64);
        let u = rng.random_range(0..(1u64 << a));
        let v = rng.random_range(0..(1u64 << a));
        cases.push((
            b,
            u,
            v,
            share_pair(b, a, &mut rng),
            share_pair(u, a, &mut rng),
            share_pair(v, a, &mut rng),
        ));
    }
    let cases = &cases;
    let results = run_two_party(a, cases.len(), 2, |party, engine| {
        cases
            .iter()
            .map(|&(_, _, _, bs, us, vs)| {
                engine.secure_mux(bs[party], us[party], vs[party]).unwrap()
            })
            .collect::<Vec<u64>>()
    });
    for (i, &(b, u, v, ..)) in cases.iter().enumerate() {
        let picked = open_pair([results[0].0[i], results[1].0[i]], a);
        assert_eq!(picked, if b == 1 { v } else { u }, "b={b} u={u} v={v}");
    }
    // exactly one triple per mux call
    assert_eq!(results[0].1.triple_ids.len(), cases.len());
}

#[test]
fn lt_mux_composition_computes_max_exhaustively() {
    let a = 5u32;
    let half = 1u64 << (a - 1);
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let mut cases = Vec::new();
    for u in 0..half {
        for v in 0..half {
            cases.push((u, share_pair(u, a, &mut rng), v, share_pair(v, a, &mut rng)));
        }
    }
    let cases = &cases;
    let results = run_two_party(a, cases.len(), 3, |party, engine| {
        cases
            .iter()
            .map(|&(_, us, _, vs)| {
                let b = engine.secure_lt(us[party], vs[party]).unwrap();
                engine.secure_mux(b, us[party], vs[party]).unwrap()
            })
            .collect::<Vec<u64>>()
    });
    for (i, &(u, _, v, _)) in cases.iter().enumerate() {
        let max = open_pair([results[0].0[i], results[1].0[i]], a);
        assert_eq!(max, u.max(v), "u={u} v={v}");
    }
}

#[test]
fn opened_mask_is_uniform() {
    // chi-square of the opened m over 10^5 comparisons at fixed (u, v)
    let a = 5u32;
    let trials = 100_000usize;
    let (u, v) = (9u64, 4u64);
    let mut rng = ChaCha20Rng::seed_from_u64(44);
    let shares: Vec<([u64; 2], [u64; 2])> = (0..trials)
        .map(|_| (share_pair(u, a, &mut rng), share_pair(v, a, &mut rng)))
        .collect();
    let shares = &shares;
    let results = run_two_party(a, trials, 4, |party, engine| {
        for &(us, vs) in shares.iter() {
            engine.secure_lt(us[party], vs[party]).unwrap();
        }
    });
    let audit = &results[0].1;
    let mut buckets = vec![0u64; 1 << a];
    for opening in &audit.openings {
        if opening.kind == OpenKind::Masked {
            buckets[opening.values[0] as usize] += 1;
        }
    }
    let total: u64 = buckets.iter().sum();
    assert_eq!(total, trials as u64);
    let expected = trials as f64 / (1 << a) as f64;
    let chi2: f64 = buckets
        .iter()
        .map(|&o| {
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum();
    // critical value of chi-square with 31 dof at significance 0.001
    assert!(chi2 < 61.1, "chi2 = {chi2}");
}

fn run_argmax(values: &[u64], a: u32, seed: u64) -> (u64, Vec<ArgmaxAudit>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xa5a5);
    let shared: Vec<[u64; 2]> = values.iter().map(|&v| share_pair(v, a, &mut rng)).collect();
    let shared = &shared;
    let results = run_two_party(a, values.len().saturating_sub(1), seed, |party, engine| {
        let limbs = dpsel::mpc::index_limbs(shared.len(), a);
        let items: Vec<TaggedShare> = shared
            .iter()
            .enumerate()
            .map(|(i, s)| TaggedShare::new(s[party], i as u64, party, a, limbs))
            .collect();
        engine.secure_argmax(&items).unwrap()
    });
    assert_eq!(results[0].0, results[1].0, "parties disagree");
    let index = results[0].0;
    let audits: Vec<ArgmaxAudit> = results.into_iter().map(|(_, audit)| audit).collect();
    let last = audits[0].openings.last().unwrap();
    assert_eq!(last.kind, OpenKind::Final);
    assert_eq!(last.values[0], index);
    (index, audits)
}

fn plaintext_argmax(values: &[u64]) -> u64 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best as u64
}

#[test]
fn argmax_single_item_is_free() {
    let (index, audits) = run_argmax(&[7], 6, 5);
    assert_eq!(index, 0);
    assert_eq!(audits[0].comparisons, 0);
    assert_eq!(audits[0].count(OpenKind::Masked), 0);
    assert_eq!(audits[0].count(OpenKind::Final), 1);
}

#[test]
fn argmax_matches_plaintext_on_permutations() {
    let a = 6u32;
    let mut rng = ChaCha20Rng::seed_from_u64(66);
    for trial in 0..100u64 {
        let mut values: Vec<u64> = (0..8).collect();
        use rand::seq::SliceRandom;
        values.shuffle(&mut rng);
        let (index, _) = run_argmax(&values, a, 100 + trial);
        assert_eq!(index, plaintext_argmax(&values), "values {values:?}");
    }
}

#[test]
fn argmax_breaks_ties_toward_lowest_index() {
    let a = 5u32;
    let cases: Vec<Vec<u64>> = vec![
        vec![3, 3, 3, 3],
        vec![0, 5, 5, 0],
        vec![2, 2],
        vec![1, 4, 4, 4, 2],
        vec![0, 0, 7],
    ];
    for (i, values) in cases.iter().enumerate() {
        let (index, _) = run_argmax(values, a, 200 + i as u64);
        assert_eq!(index, plaintext_argmax(values), "values {values:?}");
    }
}

#[test]
fn argmax_random_vectors_with_ties() {
    let a = 10u32;
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for trial in 0..200u64 {
        let d = rng.random_range(1..=64usize);
        // small value range so ties are common
        let values: Vec<u64> = (0..d).map(|_| rng.random_range(0..8u64)).collect();
        let (index, _) = run_argmax(&values, a, 300 + trial);
        assert_eq!(index, plaintext_argmax(&values), "values {values:?}");
    }
}

#[test]
fn argmax_comparison_count_is_exact() {
    // tournament over d leaves costs exactly d - 1 comparisons
    let a = 12u32;
    let mut rng = ChaCha20Rng::seed_from_u64(88);
    let values: Vec<u64> = (0..1024).map(|_| rng.random_range(0..1000u64)).collect();
    let (index, audits) = run_argmax(&values, a, 400);
    assert_eq!(index, plaintext_argmax(&values));
    assert_eq!(audits[0].comparisons, 1023);
    assert_eq!(audits[0].count(OpenKind::Masked), 1023);
    assert_eq!(audits[0].count(OpenKind::Final), 1);
    assert_eq!(audits[0].edabit_ids.len(), 1023);
}

#[test]
fn argmax_rounds_match_formula() {
    for (d, a) in [(2usize, 5u32), (7, 5), (16, 8), (33, 12), (64, 6)] {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let values: Vec<u64> = (0..d).map(|_| rng.random_range(0..16u64)).collect();
        let (_, audits) = run_argmax(&values, a, 500 + d as u64);
        assert_eq!(audits[0].rounds, argmax_rounds(d, a), "d={d} a={a}");
        assert_eq!(audits[1].rounds, argmax_rounds(d, a));
    }
}

#[test]
fn pool_exhaustion_is_an_error_not_reuse() {
    let a = 5u32;
    let spec = PreprocessSpec { h: H, k: 3, ring_bits: a, comparisons: 1, index_limbs: 1 };
    let mut rng = ChaCha20Rng::seed_from_u64(123);
    let pools = dealer_preprocess(&spec, &mut rng).unwrap();
    let mut endpoints = sim::mesh(H);
    endpoints.reverse();
    std::thread::scope(|scope| {
        for (party, mut pool) in pools.into_iter().enumerate() {
            let mut net = endpoints.pop().unwrap();
            scope.spawn(move || {
                let mut engine = ArgmaxEngine::new(party, H, &mut pool, &mut net).unwrap();
                let us = if party == 0 { 3u64 } else { 0 };
                let vs = if party == 0 { 5u64 } else { 0 };
                engine.secure_lt(us, vs).unwrap();
                // second comparison must fail: the single EdaBit is spent
                assert!(engine.secure_lt(us, vs).is_err());
            });
        }
    });
}

/// Consuming pools beyond their sizing never silently reuses randomness:
/// ids recorded in the audit are unique.
#[test]
fn consumed_ids_are_unique_within_a_run() {
    let (_, audits) = run_argmax(&[5, 3, 9, 1, 9, 0, 2], 7, 600);
    for audit in &audits {
        let mut eda = audit.edabit_ids.clone();
        eda.sort_unstable();
        eda.dedup();
        assert_eq!(eda.len(), audit.edabit_ids.len());
        let mut tri = audit.triple_ids.clone();
        tri.sort_unstable();
        tri.dedup();
        assert_eq!(tri.len(), audit.triple_ids.len());
    }
}

/// The pools built by the dealer are sized exactly for the tournament.
#[test]
fn pool_requirement_matches_consumption() {
    for (d, a) in [(5usize, 5u32), (16, 6), (33, 9)] {
        let (comparisons, triples) = pool_requirement(d, a);
        let mut rng = ChaCha20Rng::seed_from_u64(d as u64);
        let values: Vec<u64> = (0..d).map(|_| rng.random_range(0..8u64)).collect();
        let (_, audits) = run_argmax(&values, a, 700 + d as u64);
        assert_eq!(audits[0].edabit_ids.len(), comparisons, "d={d} a={a}");
        assert_eq!(audits[0].triple_ids.len(), triples, "d={d} a={a}");
    }
}

/// CorrPool serialization carries everything the engine needs.
#[test]
fn pools_survive_the_wire() {
    let spec = PreprocessSpec { h: H, k: 3, ring_bits: 6, comparisons: 4, index_limbs: 1 };
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let pools = dealer_preprocess(&spec, &mut rng).unwrap();
    for pool in &pools {
        let back = CorrPool::from_le_bytes(&pool.to_le_bytes()).unwrap();
        assert_eq!(back.generation, pool.generation);
        assert_eq!(back.edabits_total(), pool.edabits_total());
        assert_eq!(back.triples_total(), pool.triples_total());
    }
}
