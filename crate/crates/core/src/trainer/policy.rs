use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{classify, context_key, templates_for_registry, ActionTemplate, TrainError};
use crate::env::{Instruction, Registry, Step};

/// Tabular softmax policy. Contexts absent from the table have zero weights,
/// i.e. a uniform distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyModel {
    pub version: u64,
    pub action_templates: Vec<ActionTemplate>,
    pub contexts: BTreeMap<String, Vec<f64>>,
}

/// Numerically stable softmax of `weights / temperature`.
pub fn softmax(weights: &[f64], temperature: f64) -> Vec<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = weights
        .iter()
        .map(|w| ((w - max) / temperature).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl PolicyModel {
    /// Untrained (uniform) policy over the registry's template vocabulary.
    pub fn for_registry(registry: &Registry) -> Self {
        PolicyModel {
            version: 0,
            action_templates: templates_for_registry(registry),
            contexts: BTreeMap::new(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.action_templates.len()
    }

    pub fn weights(&self, key: &str) -> Vec<f64> {
        self.contexts
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.vocab_size()])
    }

    pub fn probabilities(&self, key: &str) -> Vec<f64> {
        softmax(&self.weights(key), 1.0)
    }

    pub fn log_prob(&self, key: &str, template: usize) -> f64 {
        let w = self.weights(key);
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + w.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        w[template] - lse
    }

    /// Lowest index among the maximal weights.
    pub fn greedy(&self, key: &str) -> usize {
        let w = self.weights(key);
        let mut best = 0;
        for (i, x) in w.iter().enumerate() {
            if *x > w[best] {
                best = i;
            }
        }
        best
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        crate::jsonl::write_json(path, self).map_err(|e| TrainError::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let model: PolicyModel =
            crate::jsonl::read_json(path).map_err(|e| TrainError::Checkpoint {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if let Some((key, w)) = model
            .contexts
            .iter()
            .find(|(_, w)| w.len() != model.action_templates.len())
        {
            return Err(TrainError::Checkpoint {
                path: path.to_path_buf(),
                message: format!(
                    "context {key} has {} weights for {} templates",
                    w.len(),
                    model.action_templates.len()
                ),
            });
        }
        Ok(model)
    }
}

/// Below this temperature sampling is treated as greedy decoding.
const GREEDY_TEMPERATURE: f64 = 1e-6;

/// Samples a template at the history's context and renders it as raw
/// actor text.
pub fn policy_act(
    model: &PolicyModel,
    instruction: &Instruction,
    history: &[Step],
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> String {
    let profile = classify(&instruction.text);
    let key = context_key(instruction, history);
    let choice = if temperature < GREEDY_TEMPERATURE {
        model.greedy(&key)
    } else {
        let probs = softmax(&model.weights(&key), temperature);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        pick
    };
    model.action_templates[choice]
        .render(&profile, history)
        .render()
}
