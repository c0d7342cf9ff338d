use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render_prompt;
use crate::chat::{ChatClient, ChatError, ChatMessage};
use crate::env::{Instruction, Registry, Step};
use crate::trainer::{policy_act, PolicyModel};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    Chat(#[from] ChatError),
}

/// Actor behind a chat-completions endpoint. Inference only.
#[derive(Debug, Clone)]
pub struct RemoteActor {
    pub client: ChatClient,
}

/// The built-in trainable policy.
#[derive(Debug, Clone)]
pub struct TabularActor {
    pub model: Arc<PolicyModel>,
}

/// Fixed raw replies per instruction id, replayed turn by turn.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTable {
    #[serde(default)]
    pub scripts: BTreeMap<String, Vec<String>>,
    /// Used for instructions without their own script.
    #[serde(default)]
    pub default: Vec<String>,
}

impl ScriptTable {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedActor {
    pub table: ScriptTable,
}

impl ScriptedActor {
    /// Turn `t` of an instruction's script; past the end the actor emits
    /// nothing, which the environment records as a parse error.
    fn reply(&self, instruction_id: &str, turn: usize) -> String {
        let script = self
            .table
            .scripts
            .get(instruction_id)
            .unwrap_or(&self.table.default);
        script.get(turn).cloned().unwrap_or_default()
    }
}

/// Exactly one kind of actor is active per backend value.
#[derive(Debug, Clone)]
pub enum ActorBackend {
    Remote(RemoteActor),
    Tabular(TabularActor),
    Scripted(ScriptedActor),
}

impl ActorBackend {
    pub fn tabular(model: PolicyModel) -> Self {
        ActorBackend::Tabular(TabularActor {
            model: Arc::new(model),
        })
    }

    pub fn scripted(table: ScriptTable) -> Self {
        ActorBackend::Scripted(ScriptedActor { table })
    }

    pub fn remote(client: ChatClient) -> Self {
        ActorBackend::Remote(RemoteActor { client })
    }

    /// Recorded on every trajectory this backend produces.
    pub fn identity(&self) -> String {
        match self {
            ActorBackend::Remote(r) => format!("remote:{}", r.client.config().model),
            ActorBackend::Tabular(t) => format!("tabular:v{}", t.model.version),
            ActorBackend::Scripted(_) => "scripted".into(),
        }
    }

    pub fn is_hermetic(&self) -> bool {
        !matches!(self, ActorBackend::Remote(_))
    }

    /// Remote requests are capped by the endpoint's in-flight limit.
    pub fn max_in_flight(&self) -> Option<usize> {
        match self {
            ActorBackend::Remote(r) => Some(r.client.config().max_in_flight),
            _ => None,
        }
    }

    /// Raw text of the next action.
    pub fn next_action(
        &self,
        registry: &Registry,
        instruction: &Instruction,
        history: &[Step],
        temperature: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<String, BackendError> {
        match self {
            ActorBackend::Remote(r) => {
                let prompt = render_prompt(instruction, history, registry);
                Ok(r.client.complete(&[ChatMessage::user(prompt)], temperature)?)
            }
            ActorBackend::Tabular(t) => Ok(policy_act(&t.model, instruction, history, temperature, rng)),
            ActorBackend::Scripted(s) => Ok(s.reply(&instruction.id, history.len())),
        }
    }
}
