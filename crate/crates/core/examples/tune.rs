//! Dev harness: print the utility profile of the HEPTH-shaped preset.

use dpsel::bench::{run_utility_sweep, synthetic_hepth, BenchConfig, DataSpec, Mechanism};

fn main() {
    let hist = synthetic_hepth();
    let mut sorted = hist.counts().to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    println!("top ranks: {:?}", &sorted[..12]);
    println!("n = {}", hist.weight_bound());

    let cfg = BenchConfig {
        data: DataSpec::SyntheticHepth,
        epsilons: vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20],
        runs: 1000,
        mechanisms: vec![
            Mechanism::OursCentral,
            Mechanism::OursIdealFunctionality,
            Mechanism::PermuteAndFlip,
        ],
        seed: 424242,
        ..BenchConfig::default()
    };
    let rows = run_utility_sweep(&cfg).unwrap();
    println!("{:<26} {:>6} {:>10} {:>10}", "mechanism", "eps", "mean", "std");
    for r in rows {
        println!(
            "{:<26} {:>6} {:>10.3} {:>10.3}",
            r.mechanism, r.epsilon, r.mean_error, r.std_error
        );
    }
}
