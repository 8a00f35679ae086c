//! Post-run inspection of what a corrupted minority actually saw.

use std::collections::BTreeMap;

use crate::dp::{NoiseOrigin, NoiseVector};
use crate::mpc::OpenKind;

use super::ideal::LeakageRecord;
use super::run::RunOutcome;
use super::{ProtocolConfig, ProtocolError};

/// Summary of the corrupted servers' joint view.
#[derive(Debug, Clone)]
pub struct ViewSummary {
    pub leakage: LeakageRecord,
    /// Masked comparison openings observed (one per tournament node).
    pub masked_openings: usize,
    /// Final index openings observed (one per run).
    pub final_openings: usize,
    /// Beaver-masked words observed during multiplications.
    pub triple_open_words: usize,
    /// The corrupted set includes the dealer, who knows the correlated
    /// randomness in plaintext.
    pub sees_preprocessing_plaintext: bool,
    /// Aggregate integer share vectors of corrupted computing servers.
    pub aggregate_share_of: BTreeMap<usize, Vec<i128>>,
}

/// Extract everything the corrupted set observed and summarize it. The
/// corruption bound `t` is enforced, and at least one computing server
/// must stay honest.
pub fn audit_corrupted_view(
    run: &RunOutcome,
    cfg: &ProtocolConfig,
    corrupted_ids: &[usize],
) -> Result<ViewSummary, ProtocolError> {
    let mut seen = vec![false; cfg.k];
    for &id in corrupted_ids {
        if id >= cfg.k {
            return Err(ProtocolError::Config(format!("no server {id} in a {}-server run", cfg.k)));
        }
        if seen[id] {
            return Err(ProtocolError::Config(format!("server {id} listed twice")));
        }
        seen[id] = true;
    }
    if corrupted_ids.len() > cfg.t {
        return Err(ProtocolError::Config(format!(
            "{} corruptions exceed the bound t = {}",
            corrupted_ids.len(),
            cfg.t
        )));
    }
    let corrupted_computing: Vec<usize> =
        corrupted_ids.iter().copied().filter(|&id| id < cfg.h).collect();
    if corrupted_computing.len() == cfg.h {
        return Err(ProtocolError::Config(
            "all computing servers corrupted; at least one must stay honest".into(),
        ));
    }

    // openings are only observed by computing servers
    let (mut masked, mut fin, mut triple_words) = (0usize, 0usize, 0usize);
    if let (false, Some(audit)) = (corrupted_computing.is_empty(), run.transcript.audits.first())
    {
        for opening in &audit.openings {
            match opening.kind {
                OpenKind::Masked => masked += 1,
                OpenKind::Final => fin += 1,
                OpenKind::TripleOpen => triple_words += opening.values.len(),
            }
        }
    }

    let leakage = LeakageRecord {
        corrupted_ids: corrupted_ids.to_vec(),
        leaked_noise: corrupted_ids
            .iter()
            .map(|&id| NoiseVector {
                values: run.transcript.noise_vectors[id].clone(),
                origin: NoiseOrigin::NegativeBinomial { share: cfg.nb_share() },
            })
            .collect(),
    };

    let mut aggregate_share_of = BTreeMap::new();
    for &id in &corrupted_computing {
        aggregate_share_of.insert(id, run.transcript.aggregate_shares[id].clone());
    }

    Ok(ViewSummary {
        leakage,
        masked_openings: masked,
        final_openings: fin,
        triple_open_words: triple_words,
        sees_preprocessing_plaintext: corrupted_ids.iter().any(|&id| id == cfg.h),
        aggregate_share_of,
    })
}

/// Structural hiding check between two runs that used identical seeds but
/// different inputs: a corrupted computing server's aggregate share must
/// be bit-identical when it is one of the uniformly-drawn shares
/// (`id < h-1`), and must differ by exactly the plaintext input delta for
/// the final share (`id = h-1`), i.e. its view is a deterministic
/// translate that reveals nothing beyond the 2^-kappa statistical slack.
pub fn check_share_hiding(
    real: &RunOutcome,
    other: &RunOutcome,
    cfg: &ProtocolConfig,
    input_delta: &[i128],
    corrupted_computing: usize,
) -> bool {
    let a = &real.transcript.aggregate_shares[corrupted_computing];
    let b = &other.transcript.aggregate_shares[corrupted_computing];
    if a.len() != b.len() || input_delta.len() != a.len() {
        return false;
    }
    if corrupted_computing + 1 < cfg.h {
        a == b
    } else {
        a.iter().zip(b).zip(input_delta).all(|((&x, &y), &dv)| x - y == dv)
    }
}

/// Freshness audit across runs: within each run every EdaBit and triple
/// id is consumed at most once, and no two runs share a preprocessing
/// generation.
pub fn check_randomness_freshness(runs: &[&RunOutcome]) -> bool {
    let mut generations = std::collections::BTreeSet::new();
    for run in runs {
        if !generations.insert(run.transcript.pool_generation) {
            return false;
        }
        for audit in &run.transcript.audits {
            let mut eda = audit.edabit_ids.clone();
            eda.sort_unstable();
            eda.dedup();
            if eda.len() != audit.edabit_ids.len() {
                return false;
            }
            let mut tri = audit.triple_ids.clone();
            tri.sort_unstable();
            tri.dedup();
            if tri.len() != audit.triple_ids.len() {
                return false;
            }
        }
    }
    true
}
