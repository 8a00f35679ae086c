//! Distributional checks for the samplers and mechanisms: goodness of
//! fit, divisibility of the distributed noise, and scale robustness.

mod common;

use common::{assert_chi_square_fit, geometric_pmf};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use dpsel::dp::{
    central_noisy_argmax_with_noise, sample_geometric, sample_negative_binomial, DpParams,
    Histogram,
};

fn histogram_of(samples: impl Iterator<Item = u64>, max: usize) -> Vec<u64> {
    let mut buckets = vec![0u64; max + 1];
    for s in samples {
        let idx = (s as usize).min(max);
        buckets[idx] += 1;
    }
    buckets
}

#[test]
fn geometric_sampler_fits_pmf() {
    for (i, p) in [0.1f64, 0.5, 0.9].into_iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(100 + i as u64);
        let samples = (0..100_000).map(|_| sample_geometric(p, &mut rng).unwrap());
        let observed = histogram_of(samples, 200);
        assert_chi_square_fit(&observed, geometric_pmf(p), 0.001);
    }
}

#[test]
fn negative_binomial_with_unit_shape_is_geometric() {
    let p = 0.5;
    let mut rng = ChaCha20Rng::seed_from_u64(200);
    let samples = (0..100_000).map(|_| sample_negative_binomial(1.0, p, &mut rng).unwrap());
    let observed = histogram_of(samples, 100);
    assert_chi_square_fit(&observed, geometric_pmf(p), 0.001);
}

#[test]
fn nb_sums_recover_geometric_for_two_three_five_shares() {
    // sum of m iid NB(1/m, p) samples is Geometric(p)
    for (i, m) in [2usize, 3, 5].into_iter().enumerate() {
        for (j, p) in [0.2f64, 0.5, 0.8].into_iter().enumerate() {
            let mut rng = ChaCha20Rng::seed_from_u64(300 + (i * 3 + j) as u64);
            let shape = 1.0 / m as f64;
            let samples = (0..100_000).map(|_| {
                (0..m)
                    .map(|_| sample_negative_binomial(shape, p, &mut rng).unwrap())
                    .sum::<u64>()
            });
            let observed = histogram_of(samples, 150);
            assert_chi_square_fit(&observed, geometric_pmf(p), 0.001);
        }
    }
}

#[test]
fn central_mechanism_is_scale_robust() {
    // for a fixed seed the selected index obeys the per-run bound
    // x_max - x_i <= 2 gamma Delta + |eta|_inf with Delta = 1/2
    let counts = vec![40u64, 13, 29, 0, 36, 22, 7, 40];
    let hist = Histogram::from_counts(counts).unwrap();
    for c in [0u32, 1, 2] {
        for trial in 0..200u64 {
            let params = DpParams::from_epsilon(0.8, c).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(trial);
            let (result, noise) =
                central_noisy_argmax_with_noise(&hist, &params, &mut rng).unwrap();
            let bound = params.gamma + noise.linf(); // 2 * gamma * (1/2) + linf
            assert!(
                result.error <= bound,
                "c={c} trial={trial}: error {} > bound {bound}",
                result.error
            );
        }
    }
}
