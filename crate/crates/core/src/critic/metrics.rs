use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CriticError;
use crate::store::TrajHash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Success,
    Fail,
}

impl Label {
    pub fn from_score(score: u8, threshold: u8) -> Self {
        if score >= threshold {
            Label::Success
        } else {
            Label::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledTrajectory {
    pub traj_hash: TrajHash,
    pub human_label: Label,
    pub critic_label: Label,
}

/// Critic success is the positive prediction, human success the truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// An exact non-negative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// `None` when the denominator is zero.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Ratio { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticEvaluation {
    pub counts: ConfusionCounts,
    /// Undefined (`None`) when the critic predicted no successes.
    pub precision: Option<Ratio>,
    /// Undefined (`None`) when humans labeled nothing a success.
    pub recall: Option<Ratio>,
}

pub fn evaluate_critic(labeled: &[LabeledTrajectory]) -> Result<CriticEvaluation, CriticError> {
    if labeled.is_empty() {
        return Err(CriticError::EmptyLabels);
    }
    let mut c = ConfusionCounts::default();
    for l in labeled {
        match (l.human_label, l.critic_label) {
            (Label::Success, Label::Success) => c.tp += 1,
            (Label::Success, Label::Fail) => c.fn_ += 1,
            (Label::Fail, Label::Success) => c.fp += 1,
            (Label::Fail, Label::Fail) => c.tn += 1,
        }
    }
    Ok(CriticEvaluation {
        counts: c,
        precision: Ratio::new(c.tp, c.tp + c.fp),
        recall: Ratio::new(c.tp, c.tp + c.fn_),
    })
}

pub fn load_labels(path: &Path) -> Result<Vec<LabeledTrajectory>, CriticError> {
    crate::jsonl::read(path).map_err(|e| CriticError::Labels(e.to_string()))
}
