use std::fmt;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::{Action, Step};
use crate::jsonl::{self, JsonlError};

/// 64-bit content hash, written as 16 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrajHash(pub u64);

impl fmt::Display for TrajHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for TrajHash {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 16 {
            return Err(format!("trajectory hash must be 16 hex digits, got \"{s}\""));
        }
        u64::from_str_radix(s, 16)
            .map(TrajHash)
            .map_err(|e| format!("bad trajectory hash \"{s}\": {e}"))
    }
}

impl Serialize for TrajHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrajHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Finished,
    Truncated,
    BackendError,
}

/// Field order here is the JSONL record order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub traj_hash: TrajHash,
    pub instruction_id: String,
    pub sample_index: usize,
    pub iteration_born: usize,
    pub status: TrajectoryStatus,
    pub steps: Vec<Step>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<String>,
    pub backend: String,
}

impl Trajectory {
    /// Derives hash, status and final answer from the steps.
    pub fn new(
        instruction_id: impl Into<String>,
        sample_index: usize,
        iteration_born: usize,
        steps: Vec<Step>,
        backend_failed: bool,
        backend: impl Into<String>,
    ) -> Self {
        let instruction_id = instruction_id.into();
        let final_answer = match steps.last().map(|s| &s.action) {
            Some(Action::Finish { answer }) => Some(answer.clone()),
            _ => None,
        };
        let status = if backend_failed {
            TrajectoryStatus::BackendError
        } else if final_answer.is_some() {
            TrajectoryStatus::Finished
        } else {
            TrajectoryStatus::Truncated
        };
        let traj_hash = hash_steps(&instruction_id, &steps);
        Trajectory {
            traj_hash,
            instruction_id,
            sample_index,
            iteration_born,
            status,
            steps,
            final_answer,
            backend: backend.into(),
        }
    }
}

fn hash_steps(instruction_id: &str, steps: &[Step]) -> TrajHash {
    let mut h = FnvHasher::default();
    h.write(instruction_id.as_bytes());
    h.write(&[0]);
    h.write(
        serde_json::to_string(steps)
            .expect("steps serialize")
            .as_bytes(),
    );
    TrajHash(h.finish())
}

/// FNV-1a 64 over `instruction_id`, a NUL byte, and the compact JSON of the
/// steps. Sample index, iteration and backend do not contribute.
pub fn hash_trajectory(t: &Trajectory) -> TrajHash {
    hash_steps(&t.instruction_id, &t.steps)
}

/// Writes `run_dir/trajectories.jsonl`.
pub fn persist(trajectories: &[Trajectory], run_dir: &Path) -> Result<PathBuf, JsonlError> {
    let path = run_dir.join(super::TRAJECTORIES_FILE);
    jsonl::write(&path, trajectories)?;
    Ok(path)
}

pub fn load(path: &Path) -> Result<Vec<Trajectory>, JsonlError> {
    jsonl::read(path)
}
