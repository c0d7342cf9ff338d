//! Trajectory critic: a chat-completions judge or a deterministic oracle,
//! plus the precision/recall harness used to calibrate it against human
//! labels.

mod metrics;
mod prompt;

pub use metrics::{
    evaluate_critic, load_labels, ConfusionCounts, CriticEvaluation, Label, LabeledTrajectory,
    Ratio,
};
pub use prompt::{parse_score, render_critic_prompt};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chat::{ChatClient, ChatMessage};
use crate::env::{check_answer, Instruction};
use crate::store::{TrajHash, Trajectory, TrajectoryStatus};

pub const VERDICTS_FILE: &str = "verdicts.jsonl";

/// Scores at or above this count as "success" when binarized.
pub const SUCCESS_THRESHOLD: u8 = 7;

pub const ORACLE_CORRECT: u8 = 10;
pub const ORACLE_WRONG: u8 = 2;
pub const ORACLE_TRUNCATED: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticKind {
    Remote,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticVerdict {
    pub traj_hash: TrajHash,
    pub score: u8,
    pub rationale: String,
    pub backend: CriticKind,
    pub parse_ok: bool,
}

impl CriticVerdict {
    /// Zero-score verdict for trajectories the critic never saw.
    pub fn unscored(traj_hash: TrajHash, backend: CriticKind, reason: impl Into<String>) -> Self {
        CriticVerdict {
            traj_hash,
            score: 0,
            rationale: reason.into(),
            backend,
            parse_ok: false,
        }
    }

    pub fn is_success(&self, threshold: u8) -> bool {
        self.score >= threshold
    }
}

#[derive(Debug, Clone)]
pub enum CriticBackend {
    Oracle,
    Remote(ChatClient),
}

impl CriticBackend {
    pub fn kind(&self) -> CriticKind {
        match self {
            CriticBackend::Oracle => CriticKind::Oracle,
            CriticBackend::Remote(_) => CriticKind::Remote,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CriticError {
    #[error("trajectory {0} failed in the backend and cannot be scored")]
    NotScorable(TrajHash),
    #[error("no labeled trajectories")]
    EmptyLabels,
    #[error("labels: {0}")]
    Labels(String),
}

/// Scores one trajectory.
///
/// The oracle gives 10 when the final answer passes the instruction's
/// checker, 2 when the episode finished with a wrong answer, 0 when it was
/// truncated. The remote critic's first `SCORE: <0-10>` line is used; an
/// unparsable reply or an unreachable endpoint scores 0 with `parse_ok` false.
pub fn score(
    trajectory: &Trajectory,
    instruction: &Instruction,
    backend: &CriticBackend,
) -> Result<CriticVerdict, CriticError> {
    let hash = trajectory.traj_hash;
    match (trajectory.status, backend) {
        (TrajectoryStatus::BackendError, _) => Err(CriticError::NotScorable(hash)),
        (_, CriticBackend::Oracle) => {
            let (score, rationale) = match &trajectory.final_answer {
                Some(answer) if check_answer(instruction, answer) => {
                    (ORACLE_CORRECT, "final answer accepted by the checker")
                }
                Some(_) => (ORACLE_WRONG, "finished with an answer the checker rejects"),
                None => (ORACLE_TRUNCATED, "no final answer within the round cap"),
            };
            Ok(CriticVerdict {
                traj_hash: hash,
                score,
                rationale: rationale.into(),
                backend: CriticKind::Oracle,
                parse_ok: true,
            })
        }
        (_, CriticBackend::Remote(client)) => {
            let prompt = render_critic_prompt(instruction, trajectory);
            let verdict = match client.complete(&[ChatMessage::user(prompt)], 0.0) {
                Ok(reply) => match parse_score(&reply) {
                    Some((score, rationale)) => CriticVerdict {
                        traj_hash: hash,
                        score,
                        rationale,
                        backend: CriticKind::Remote,
                        parse_ok: true,
                    },
                    None => CriticVerdict::unscored(
                        hash,
                        CriticKind::Remote,
                        format!("unparsable critic reply: {}", reply.trim()),
                    ),
                },
                Err(e) => CriticVerdict::unscored(hash, CriticKind::Remote, format!("critic unreachable: {e}")),
            };
            Ok(verdict)
        }
    }
}

/// Scores a batch in input order. Backend-error trajectories get an
/// unscored verdict. Remote scoring runs up to the endpoint's in-flight cap.
pub fn score_all(
    trajectories: &[Trajectory],
    lookup: impl Fn(&str) -> Option<Instruction> + Sync,
    backend: &CriticBackend,
) -> Vec<CriticVerdict> {
    let one = |t: &Trajectory| {
        let Some(instruction) = lookup(&t.instruction_id) else {
            return CriticVerdict::unscored(
                t.traj_hash,
                backend.kind(),
                format!("unknown instruction {}", t.instruction_id),
            );
        };
        score(t, &instruction, backend).unwrap_or_else(|e| {
            CriticVerdict::unscored(t.traj_hash, backend.kind(), e.to_string())
        })
    };
    match backend {
        CriticBackend::Oracle => trajectories.iter().map(one).collect(),
        CriticBackend::Remote(client) => {
            match rayon::ThreadPoolBuilder::new()
                .num_threads(client.config().max_in_flight.max(1))
                .build()
            {
                Ok(pool) => pool.install(|| trajectories.par_iter().map(one).collect()),
                Err(_) => trajectories.iter().map(one).collect(),
            }
        }
    }
}

#[cfg(test)]
mod tests;
