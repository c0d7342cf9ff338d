//! The actor: prompt construction, action parsing, pluggable backends, and
//! K-way trajectory sampling.

mod backend;
mod grammar;
mod prompt;
mod sample;

pub use backend::{ActorBackend, BackendError, RemoteActor, ScriptTable, ScriptedActor, TabularActor};
pub use grammar::{parse_action, ParseFailure};
pub use prompt::render_prompt;
pub use sample::{run_episode, sample_trajectories, SampleError, SamplingConfig};
