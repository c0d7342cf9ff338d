//! Deterministic simulated multi-API environment.
//!
//! A [`Registry`] holds the tool specs, a [`Session`] plays one episode of an
//! [`Instruction`] against it, and [`check_answer`] decides whether a final
//! answer fulfils the instruction.

mod checker;
mod handlers;
mod instruction;
mod registry;
mod session;

pub use checker::{check_answer, normalize_answer, Checker};
pub use handlers::{evaluate_expression, WorldState, HANDLER_IDS};
pub use instruction::{load_instructions, parse_instructions, Instruction, Split};
pub use registry::{registry_load, ApiSpec, ParamSpec, ParamType, Registry};
pub use session::{Action, ObsStatus, Observation, Session, Step};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("{path}: line {line}, column {column}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Validation { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("session is already finished")]
    SessionFinished,
}

impl EnvError {
    pub(crate) fn from_json(path: &std::path::Path, err: serde_json::Error) -> Self {
        EnvError::Format {
            path: path.to_path_buf(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
