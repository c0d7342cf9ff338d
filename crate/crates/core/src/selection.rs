//! Top-p% training-data selection with cross-iteration exclusion.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::critic::CriticVerdict;
use crate::store::{ExclusionLedger, TrajHash, Trajectory};

pub const SELECTED_FILE: &str = "selected.jsonl";

fn default_p() -> f64 {
    10.0
}

fn default_floor() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    /// Percentage in (0, 100], resolved to millionths of a percent.
    #[serde(default = "default_p")]
    pub p_percent: f64,
    #[serde(default = "default_floor")]
    pub min_score_floor: u8,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            p_percent: default_p(),
            min_score_floor: default_floor(),
        }
    }
}

const P_SCALE: u128 = 1_000_000;

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.p_percent > 0.0 && self.p_percent <= 100.0) {
            return Err(format!("p_percent must be in (0, 100], got {}", self.p_percent));
        }
        Ok(())
    }

    /// `min(ceil(p/100 × eligible), eligible)`, in integer arithmetic.
    pub fn quota(&self, eligible: usize) -> usize {
        let p = (self.p_percent * P_SCALE as f64).round() as u128;
        let den = 100 * P_SCALE;
        let count = (p * eligible as u128).div_ceil(den);
        (count as usize).min(eligible)
    }
}

/// Picks the top-p% of eligible trajectories and records them in the ledger.
///
/// Eligible means: not in the ledger, score at or above the floor, and not
/// backend-failed. Byte-identical trajectories within the pool collapse to
/// their best-scored copy. Ordering is score descending, then hash ascending,
/// so the result is fully determined by the inputs.
pub fn select(
    verdicts: &[(Trajectory, CriticVerdict)],
    ledger: &mut ExclusionLedger,
    iteration: usize,
    cfg: &SelectionConfig,
) -> Vec<Trajectory> {
    let mut best: HashMap<TrajHash, (&Trajectory, u8)> = HashMap::new();
    for (t, v) in verdicts {
        debug_assert_eq!(t.traj_hash, v.traj_hash);
        if ledger.contains(t.traj_hash) || v.score < cfg.min_score_floor {
            continue;
        }
        if t.status == crate::store::TrajectoryStatus::BackendError {
            continue;
        }
        best.entry(t.traj_hash)
            .and_modify(|e| {
                if v.score > e.1 {
                    *e = (t, v.score);
                }
            })
            .or_insert((t, v.score));
    }
    let mut candidates: Vec<(&Trajectory, u8)> = best.into_values().collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.traj_hash.cmp(&b.0.traj_hash)));
    let quota = cfg.quota(candidates.len());
    let chosen: Vec<Trajectory> = candidates
        .into_iter()
        .take(quota)
        .map(|(t, _)| t.clone())
        .collect();
    for t in &chosen {
        ledger.record(t.traj_hash, iteration);
    }
    chosen
}
