//! Histogram ingestion and synthetic data.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dp::Histogram;

use super::BenchError;

/// Load a histogram from a CSV file with one `index,count` row per bin.
/// Indices must be contiguous from 0; an optional `index,count` header is
/// skipped. Problems are reported with their line number.
pub fn load_histogram(path: &Path) -> Result<Histogram, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
    let fail = |line: usize, message: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut counts: Vec<u64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.eq_ignore_ascii_case("index,count") {
            continue;
        }
        let (idx_str, count_str) = line
            .split_once(',')
            .ok_or_else(|| fail(line_number, "expected `index,count`".into()))?;
        let index: usize = idx_str
            .trim()
            .parse()
            .map_err(|_| fail(line_number, format!("bad index `{}`", idx_str.trim())))?;
        let count: u64 = count_str.trim().parse().map_err(|_| {
            fail(line_number, format!("bad count `{}` (counts are nonnegative integers)", count_str.trim()))
        })?;
        match index.cmp(&counts.len()) {
            std::cmp::Ordering::Equal => counts.push(count),
            std::cmp::Ordering::Less => {
                return Err(fail(line_number, format!("duplicate index {index}")))
            }
            std::cmp::Ordering::Greater => {
                return Err(fail(
                    line_number,
                    format!("gap in indices: expected {}, found {index}", counts.len()),
                ))
            }
        }
    }
    if counts.is_empty() {
        return Err(fail(1, "no bins".into()));
    }
    Ok(Histogram::from_counts(counts).expect("nonempty validated counts"))
}

/// Bits needed to represent `max_value`: `ceil(log2(max_value + 1))`,
/// with 0 mapping to 1.
pub fn bits_required(max_value: u64) -> u32 {
    (64 - max_value.leading_zeros()).max(1)
}

/// Re-bin to `d` bins by summing contiguous equal-width index ranges;
/// when the input length is not a multiple of `d`, the remainder folds
/// into the last bin. Total count is preserved exactly.
pub fn discretize(raw: &[u64], d: usize) -> Result<Histogram, BenchError> {
    if raw.is_empty() {
        return Err(BenchError::Config("cannot discretize an empty histogram".into()));
    }
    if d < 1 {
        return Err(BenchError::Config("target dimension must be at least 1".into()));
    }
    if raw.len() < d {
        return Err(BenchError::Config(format!(
            "cannot widen a length-{} histogram to {d} bins",
            raw.len()
        )));
    }
    let width = raw.len() / d;
    let mut counts = vec![0u64; d];
    for (i, &v) in raw.iter().enumerate() {
        let bin = (i / width).min(d - 1);
        counts[bin] += v;
    }
    Ok(Histogram::from_counts(counts).expect("nonempty counts"))
}

/// Truncation bits implied by the approximation parameter `alpha`: the
/// post-truncation comparison error `2^c * h` must stay within
/// `alpha * max`, so `c = floor(log2(alpha * max / h))`.
pub fn trunc_bits_for_alpha(max_value: u64, alpha: f64, h: usize) -> u32 {
    let budget = alpha * max_value as f64 / h as f64;
    if budget < 1.0 {
        return 0;
    }
    budget.log2().floor() as u32
}

/// Power-law-shaped histogram: rank `i` gets `max_count * (i+1)^(-shape)`,
/// with the ranks scattered over the index range by a seeded shuffle.
pub fn synthetic_power_law(d: usize, max_count: u64, shape: f64, seed: u64) -> Histogram {
    let ranked: Vec<u64> = (0..d)
        .map(|i| (max_count as f64 * ((i + 1) as f64).powf(-shape)).round() as u64)
        .collect();
    scatter(ranked, seed)
}

/// Values for the near-maximum ranks of the HEPTH-shaped preset. The top
/// value and the decay of the runners-up control how hard selection is:
/// the first gap is wide enough that moderate budgets always recover a
/// true argmax, while the cluster below it produces the occasional large
/// miss at very small budgets.
const HEPTH_TOP: &[u64] =
    &[1571, 1381, 1355, 1336, 1302, 1281, 1254, 1207, 1161, 1116, 1072, 1029];

/// Deterministic HEPTH-shaped histogram: `d = 1024`, maximum 1571, a
/// pinned near-max profile, and a power-law tail.
pub fn synthetic_hepth() -> Histogram {
    let d = 1024usize;
    let shape = 0.55f64;
    let mut ranked: Vec<u64> = Vec::with_capacity(d);
    ranked.extend_from_slice(HEPTH_TOP);
    let anchor = *HEPTH_TOP.last().expect("non-empty") as f64;
    let start = HEPTH_TOP.len();
    for i in start..d {
        let rel = ((i + 1) as f64 / (start + 1) as f64).powf(-shape);
        ranked.push((anchor * rel).round() as u64);
    }
    scatter(ranked, 0x48455054)
}

fn scatter(ranked: Vec<u64>, seed: u64) -> Histogram {
    let mut counts = ranked;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    counts.shuffle(&mut rng);
    Histogram::from_counts(counts).expect("nonempty counts")
}

/// `n` one-hot vectors with seeded random positions (protocol cost runs).
pub fn synthetic_one_hot_inputs(d: usize, n: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = vec![0u8; d];
            v[rng.random_range(0..d)] = 1;
            v
        })
        .collect()
}
