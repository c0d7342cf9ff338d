//! Desk-scale trainable actor.
//!
//! The policy is a table of softmax distributions over a fixed vocabulary of
//! action templates, indexed by a coarse context key. Training minimizes the
//! masked negative log-likelihood of the supervised actions in an exported
//! SFT dataset, the same file a real-model fine-tuner would consume.

mod context;
mod optimize;
mod policy;
mod supervision;
mod template;

pub use context::{classify, context_key, InstructionProfile};
pub use optimize::{grad_check, gradient, train, LrSchedule, TrainConfig, TrainOutcome};
pub use policy::{policy_act, softmax, PolicyModel};
pub use supervision::{nll, supervision, SupervisedAction, Supervision};
pub use template::{templates_for_registry, ActionTemplate, AnswerSource, TemplateParam};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("finite-difference epsilon {0} is outside [1e-7, 1e-3]")]
    Epsilon(f64),
    #[error("invalid train config: {0}")]
    Config(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}
