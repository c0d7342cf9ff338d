use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_action, ActorBackend};
use crate::env::{Instruction, Registry, Session};
use crate::rng::{pair_stream, stream_rng, DOMAIN_SAMPLE};
use crate::store::Trajectory;

fn default_k() -> usize {
    5
}

fn default_m() -> usize {
    5
}

fn default_temperature() -> f64 {
    0.7
}

/// K trajectories per instruction, at most M rounds each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Filled from the run's top-level seed; never read from config.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            k: default_k(),
            m: default_m(),
            temperature: default_temperature(),
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be positive".into());
        }
        if self.m == 0 {
            return Err("m must be positive".into());
        }
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("no instructions to sample")]
    NoInstructions,
    #[error("registry has no apis")]
    EmptyRegistry,
    #[error("invalid sampling config: {0}")]
    Config(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Plays one episode. A backend failure ends the episode early and marks the
/// trajectory `backend_error`.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    instruction: &Instruction,
    backend: &ActorBackend,
    registry: &Registry,
    round_cap: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
    sample_index: usize,
    iteration: usize,
) -> Trajectory {
    let mut session = Session::new(registry, instruction, round_cap);
    let mut failed = false;
    while !session.is_finished() {
        let raw = match backend.next_action(registry, instruction, session.steps(), temperature, rng)
        {
            Ok(raw) => raw,
            Err(_) => {
                failed = true;
                break;
            }
        };
        let stepped = match parse_action(&raw) {
            Ok(action) => session.step(action),
            Err(failure) => session.record_parse_error(raw, &failure.to_string()),
        };
        stepped.expect("session is not finished");
    }
    Trajectory::new(
        instruction.id.clone(),
        sample_index,
        iteration,
        session.into_steps(),
        failed,
        backend.identity(),
    )
}

/// Returns exactly `N × K` trajectories in `(n, k)` order. Hermetic backends
/// make the result a pure function of `(seed, iteration, n, k)`.
pub fn sample_trajectories(
    instructions: &[Instruction],
    backend: &ActorBackend,
    cfg: &SamplingConfig,
    registry: &Registry,
    iteration: usize,
) -> Result<Vec<Trajectory>, SampleError> {
    if instructions.is_empty() {
        return Err(SampleError::NoInstructions);
    }
    if registry.is_empty() {
        return Err(SampleError::EmptyRegistry);
    }
    cfg.validate().map_err(SampleError::Config)?;

    let pairs: Vec<(usize, usize)> = (0..instructions.len())
        .flat_map(|n| (0..cfg.k).map(move |k| (n, k)))
        .collect();
    let domain = DOMAIN_SAMPLE.wrapping_add(iteration as u64);
    let sample = |&(n, k): &(usize, usize)| {
        let mut rng = stream_rng(cfg.seed, domain, pair_stream(n, k));
        run_episode(
            &instructions[n],
            backend,
            registry,
            cfg.m,
            cfg.temperature,
            &mut rng,
            k,
            iteration,
        )
    };
    match backend.max_in_flight() {
        Some(limit) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(limit.max(1))
                .build()
                .map_err(|e| SampleError::Pool(e.to_string()))?;
            Ok(pool.install(|| pairs.par_iter().map(sample).collect()))
        }
        None => Ok(pairs.par_iter().map(sample).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::ScriptTable;
    use crate::fixtures;
    use crate::store::TrajectoryStatus;
    use crate::trainer::PolicyModel;

    #[test]
    fn n_times_k_with_cap() {
        let reg = Registry::builtin();
        let ins: Vec<_> = fixtures::instructions().into_iter().take(4).collect();
        let backend = ActorBackend::tabular(PolicyModel::for_registry(&reg));
        let cfg = SamplingConfig {
            temperature: 1.0,
            ..Default::default()
        };
        let out = sample_trajectories(&ins, &backend, &cfg, &reg, 1).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|t| t.steps.len() <= 5));
        for (i, t) in out.iter().enumerate() {
            assert_eq!(t.instruction_id, ins[i / 5].id);
            assert_eq!(t.sample_index, i % 5);
            assert_eq!(t.backend, "tabular:v0");
        }
        let again = sample_trajectories(&ins, &backend, &cfg, &reg, 1).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn scripted_replay_is_truncated_at_cap() {
        let reg = Registry::builtin();
        let ins: Vec<_> = fixtures::instructions().into_iter().take(1).collect();
        let table = ScriptTable {
            default: vec!["CALL todo_list {}".into(); 7],
            ..Default::default()
        };
        let cfg = SamplingConfig {
            k: 1,
            ..Default::default()
        };
        let out = sample_trajectories(&ins, &ActorBackend::scripted(table), &cfg, &reg, 1).unwrap();
        assert_eq!(out[0].steps.len(), 5);
        assert_eq!(out[0].status, TrajectoryStatus::Truncated);
        assert!(out[0]
            .steps
            .iter()
            .all(|s| s.action.render() == "CALL todo_list {}"));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let reg = Registry::builtin();
        let backend = ActorBackend::scripted(ScriptTable::default());
        let cfg = SamplingConfig::default();
        assert!(matches!(
            sample_trajectories(&[], &backend, &cfg, &reg, 1),
            Err(SampleError::NoInstructions)
        ));
        let ins = fixtures::instructions();
        assert!(matches!(
            sample_trajectories(&ins, &backend, &cfg, &Registry::default(), 1),
            Err(SampleError::EmptyRegistry)
        ));
    }

    #[test]
    fn exhausted_script_becomes_parse_error() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let backend = ActorBackend::scripted(ScriptTable::default());
        let mut rng = stream_rng(0, 0, 0);
        let t = run_episode(ins, &backend, &reg, 2, 0.0, &mut rng, 0, 1);
        assert_eq!(t.steps.len(), 2);
        assert!(t.steps[0].observation.payload.contains("no action"));
    }
}
