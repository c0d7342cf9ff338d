//! Trajectory data model, content-hash identity, persistence, and the
//! cross-iteration exclusion ledger.

mod ledger;
mod trajectory;

pub use ledger::{ExclusionLedger, LedgerEntry};
pub use trajectory::{hash_trajectory, load, persist, TrajHash, Trajectory, TrajectoryStatus};

pub const TRAJECTORIES_FILE: &str = "trajectories.jsonl";
pub const LEDGER_FILE: &str = "ledger.jsonl";
