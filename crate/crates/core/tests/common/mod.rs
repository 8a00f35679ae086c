//! Shared statistical helpers for the integration suites.

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Chi-square goodness-of-fit of observed counts against a discrete pmf.
/// Support cells are merged from the tail until every expected count is
/// at least 5. Panics if the statistic exceeds the critical value at the
/// given significance.
pub fn assert_chi_square_fit(observed: &[u64], pmf: impl Fn(usize) -> f64, significance: f64) {
    let n: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut tail_obs = 0.0;
    let mut tail_exp = 0.0;
    let mut cum = 0.0;
    for (x, &o) in observed.iter().enumerate() {
        let e = pmf(x) * n as f64;
        cum += pmf(x);
        tail_obs += o as f64;
        tail_exp += e;
        if tail_exp >= 5.0 {
            cells.push((tail_obs, tail_exp));
            tail_obs = 0.0;
            tail_exp = 0.0;
        }
    }
    // everything beyond the observed support
    tail_obs += 0.0;
    tail_exp += (1.0 - cum).max(0.0) * n as f64;
    if tail_exp > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += tail_obs;
            last.1 += tail_exp;
        }
    }
    assert!(cells.len() >= 2, "need at least two cells, got {}", cells.len());

    let chi2: f64 = cells
        .iter()
        .map(|(o, e)| {
            let diff = o - e;
            diff * diff / e
        })
        .sum();
    let dof = (cells.len() - 1) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(1.0 - significance);
    assert!(
        chi2 <= critical,
        "chi-square {chi2:.2} exceeds critical {critical:.2} at {} dof",
        dof
    );
}

/// Geometric pmf `p(1-p)^x`.
pub fn geometric_pmf(p: f64) -> impl Fn(usize) -> f64 {
    move |x| p * (1.0 - p).powi(x as i32)
}

/// Two-sided empirical epsilon-DP ratio check with Hoeffding slack:
/// for every outcome `i`, `p_hat_a(i) <= e^eps * p_hat_b(i) + (1 + e^eps) * delta`
/// where `delta = sqrt(ln(2/alpha) / (2N))` at confidence `1 - alpha`.
pub fn assert_dp_ratio(counts_a: &[u64], counts_b: &[u64], epsilon: f64, alpha: f64) {
    assert_eq!(counts_a.len(), counts_b.len());
    let n_a: u64 = counts_a.iter().sum();
    let n_b: u64 = counts_b.iter().sum();
    assert_eq!(n_a, n_b, "both arms need the same run count");
    let n = n_a as f64;
    let delta = ((2.0 / alpha).ln() / (2.0 * n)).sqrt();
    let e_eps = epsilon.exp();
    for i in 0..counts_a.len() {
        let pa = counts_a[i] as f64 / n;
        let pb = counts_b[i] as f64 / n;
        let slack = (1.0 + e_eps) * delta;
        assert!(
            pa <= e_eps * pb + slack,
            "outcome {i}: {pa:.5} > e^{epsilon} * {pb:.5} + {slack:.5}"
        );
        assert!(
            pb <= e_eps * pa + slack,
            "outcome {i} (reverse): {pb:.5} > e^{epsilon} * {pa:.5} + {slack:.5}"
        );
    }
}

/// Mean and (sample) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt())
}
