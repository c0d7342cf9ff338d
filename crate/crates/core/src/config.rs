//! The single run configuration file.
//!
//! Parsing is strict: unknown keys anywhere are rejected. Relative paths are
//! resolved against the config file's directory; absent paths select the
//! bundled desk fixtures. Secrets never appear here, only the names of the
//! environment variables that hold them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actor::{ActorBackend, SamplingConfig, ScriptTable};
use crate::chat::{ChatClient, EndpointConfig};
use crate::critic::CriticBackend;
use crate::dataset::{load_general_pool, GeneralChat};
use crate::env::{load_instructions, registry_load, Instruction, Registry, Split};
use crate::fixtures;
use crate::selection::SelectionConfig;
use crate::trainer::{PolicyModel, TrainConfig};

fn default_iterations() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActorConfig {
    Tabular {},
    Scripted { script: PathBuf },
    Remote { endpoint: EndpointConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriticConfig {
    Oracle {},
    Remote { endpoint: EndpointConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instructions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general_pool: Option<PathBuf>,
    pub actor: ActorConfig,
    pub critic: CriticConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("loading {what}: {message}")]
    Fixture { what: &'static str, message: String },
}

impl Config {
    pub fn from_json(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_json(path, &text)
    }

    /// The bundled desk configuration.
    pub fn desk() -> Self {
        Config::from_json(Path::new("desk.json"), fixtures::DESK_CONFIG_JSON)
            .expect("bundled desk config is valid")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.registry);
        fix(&mut self.instructions);
        fix(&mut self.general_pool);
        if let ActorConfig::Scripted { script } = &mut self.actor {
            if script.is_relative() {
                *script = base.join(&*script);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = ConfigError::Invalid;
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1".into()));
        }
        self.sampling.validate().map_err(invalid)?;
        self.selection.validate().map_err(invalid)?;
        self.train.validate().map_err(invalid)?;
        if let ActorConfig::Remote { endpoint } = &self.actor {
            endpoint.validate().map_err(|e| invalid(format!("actor: {e}")))?;
        }
        if let CriticConfig::Remote { endpoint } = &self.critic {
            endpoint.validate().map_err(|e| invalid(format!("critic: {e}")))?;
        }
        Ok(())
    }

    /// No network access is needed when both actor and critic are local.
    pub fn is_hermetic(&self) -> bool {
        !matches!(self.actor, ActorConfig::Remote { .. })
            && !matches!(self.critic, CriticConfig::Remote { .. })
    }

    /// Sampling settings with the run seed applied.
    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            ..self.sampling.clone()
        }
    }

    pub fn critic_backend(&self) -> CriticBackend {
        match &self.critic {
            CriticConfig::Oracle {} => CriticBackend::Oracle,
            CriticConfig::Remote { endpoint } => CriticBackend::Remote(ChatClient::new(endpoint.clone())),
        }
    }

    /// The sampling actor. The tabular kind wraps the current model.
    pub fn actor_backend(&self, model: &PolicyModel) -> Result<ActorBackend, ConfigError> {
        Ok(match &self.actor {
            ActorConfig::Tabular {} => ActorBackend::tabular(model.clone()),
            ActorConfig::Scripted { script } => ActorBackend::scripted(
                ScriptTable::load(script).map_err(|message| ConfigError::Fixture {
                    what: "actor script",
                    message,
                })?,
            ),
            ActorConfig::Remote { endpoint } => ActorBackend::remote(ChatClient::new(endpoint.clone())),
        })
    }

    pub fn load_workspace(&self) -> Result<Workspace, ConfigError> {
        let fixture = |what: &'static str| move |e: String| ConfigError::Fixture { what, message: e };
        let registry = match &self.registry {
            Some(p) => registry_load(p).map_err(|e| fixture("registry")(e.to_string()))?,
            None => Registry::builtin(),
        };
        let instructions = match &self.instructions {
            Some(p) => load_instructions(p).map_err(|e| fixture("instructions")(e.to_string()))?,
            None => fixtures::instructions(),
        };
        let general_pool = match &self.general_pool {
            Some(p) => load_general_pool(p).map_err(|e| fixture("general pool")(e.to_string()))?,
            None => fixtures::general_pool(),
        };
        Ok(Workspace {
            registry,
            instructions,
            general_pool,
        })
    }
}

/// Everything loaded from the fixture files a config points at.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub registry: Registry,
    pub instructions: Vec<Instruction>,
    pub general_pool: Vec<GeneralChat>,
}

impl Workspace {
    pub fn split(&self, split: Split) -> Vec<Instruction> {
        self.instructions
            .iter()
            .filter(|i| i.split == split)
            .cloned()
            .collect()
    }

    pub fn instruction(&self, id: &str) -> Option<&Instruction> {
        self.instructions.iter().find(|i| i.id == id)
    }
}
