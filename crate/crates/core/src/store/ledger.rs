use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrajHash;
use crate::jsonl::{self, JsonlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub traj_hash: TrajHash,
    pub iteration_used: usize,
}

/// Hashes of trajectories already used for training. Append-only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExclusionLedger {
    entries: Vec<LedgerEntry>,
    used: HashSet<TrajHash>,
}

impl ExclusionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LedgerEntry>) -> Self {
        let mut ledger = Self::new();
        for e in entries {
            ledger.record(e.traj_hash, e.iteration_used);
        }
        ledger
    }

    pub fn contains(&self, hash: TrajHash) -> bool {
        self.used.contains(&hash)
    }

    /// Returns false (and records nothing) when the hash is already present.
    pub fn record(&mut self, hash: TrajHash, iteration: usize) -> bool {
        if !self.used.insert(hash) {
            return false;
        }
        self.entries.push(LedgerEntry {
            traj_hash: hash,
            iteration_used: iteration,
        });
        true
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The ledger as it stood before `iteration` recorded anything.
    pub fn before(&self, iteration: usize) -> Self {
        Self::from_entries(
            self.entries
                .iter()
                .copied()
                .filter(|e| e.iteration_used < iteration),
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), JsonlError> {
        jsonl::write(path, &self.entries)
    }

    /// A missing file is an empty ledger.
    pub fn load(path: &Path) -> Result<Self, JsonlError> {
        if !path.exists() {
            return Ok(Self::new());
        }
        Ok(Self::from_entries(jsonl::read::<LedgerEntry>(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn before_filters_by_iteration() {
        let mut l = ExclusionLedger::new();
        l.record(TrajHash(1), 1);
        l.record(TrajHash(2), 2);
        let b = l.before(2);
        assert!(b.contains(TrajHash(1)));
        assert!(!b.contains(TrajHash(2)));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let l = ExclusionLedger::from_entries([
            LedgerEntry { traj_hash: TrajHash(7), iteration_used: 1 },
            LedgerEntry { traj_hash: TrajHash(3), iteration_used: 2 },
        ]);
        l.save(&path).unwrap();
        assert_eq!(ExclusionLedger::load(&path).unwrap(), l);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), r#"{"traj_hash":"0000000000000007","iteration_used":1}"#);
    }

    proptest! {
        #[test]
        fn recorded_hashes_are_never_lost(ops in prop::collection::vec((0u64..50, 0usize..5), 0..200)) {
            let mut l = ExclusionLedger::new();
            let mut seen = Vec::new();
            for (h, it) in ops {
                l.record(TrajHash(h), it);
                seen.push(TrajHash(h));
                for s in &seen {
                    prop_assert!(l.contains(*s));
                }
            }
        }
    }
}
