//! The five per-iteration stages. Each reads its inputs from the run
//! directory and writes exactly one artifact, so running them one by one
//! reproduces what `run_evolution` writes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{evaluate, EvalOutcome, StageError};
use crate::actor::sample_trajectories;
use crate::config::{Config, Workspace};
use crate::critic::{score_all, CriticVerdict, VERDICTS_FILE};
use crate::dataset::{build_sft_example, export, import, mix, DATASET_FILE};
use crate::env::{Instruction, Split};
use crate::jsonl;
use crate::selection::{select, SELECTED_FILE};
use crate::store::{persist, ExclusionLedger, Trajectory, LEDGER_FILE, TRAJECTORIES_FILE};
use crate::trainer::{train, PolicyModel};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.json";
pub const REPORT_FILE: &str = "report.json";

pub fn iter_dir(run_dir: &Path, iteration: usize) -> PathBuf {
    run_dir.join(format!("iter_{iteration}"))
}

fn require(path: PathBuf) -> Result<PathBuf, StageError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(StageError::MissingInput(path))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), StageError> {
    std::fs::create_dir_all(dir).map_err(|source| StageError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// The model that iteration `iteration` starts from.
pub fn model_before(
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<PolicyModel, StageError> {
    if iteration <= 1 {
        return Ok(PolicyModel::for_registry(&ws.registry));
    }
    let path = require(iter_dir(run_dir, iteration - 1).join(CHECKPOINT_FILE))?;
    Ok(PolicyModel::load(&path)?)
}

/// Train-split lookup. Anything else reaching a training stage is leakage.
fn train_instruction<'a>(ws: &'a Workspace, id: &str) -> Result<&'a Instruction, StageError> {
    match ws.instruction(id) {
        Some(ins) if ins.split == Split::Train => Ok(ins),
        Some(_) => Err(StageError::Leakage(format!(
            "eval instruction {id} reached a training stage"
        ))),
        None => Err(StageError::Mismatch(format!("unknown instruction {id}"))),
    }
}

pub fn sample(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<Vec<Trajectory>, StageError> {
    let model = model_before(ws, run_dir, iteration)?;
    let backend = cfg.actor_backend(&model)?;
    let train = ws.split(Split::Train);
    let trajectories =
        sample_trajectories(&train, &backend, &cfg.sampling(), &ws.registry, iteration)?;
    let dir = iter_dir(run_dir, iteration);
    ensure_dir(&dir)?;
    persist(&trajectories, &dir)?;
    Ok(trajectories)
}

pub fn score(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<Vec<CriticVerdict>, StageError> {
    let dir = iter_dir(run_dir, iteration);
    let trajectories: Vec<Trajectory> = jsonl::read(&require(dir.join(TRAJECTORIES_FILE))?)?;
    for t in &trajectories {
        train_instruction(ws, &t.instruction_id)?;
    }
    let lookup = |id: &str| train_instruction(ws, id).ok().cloned();
    let verdicts = score_all(&trajectories, lookup, &cfg.critic_backend());
    jsonl::write(&dir.join(VERDICTS_FILE), &verdicts)?;
    Ok(verdicts)
}

pub fn select_stage(
    cfg: &Config,
    run_dir: &Path,
    iteration: usize,
) -> Result<Vec<Trajectory>, StageError> {
    let dir = iter_dir(run_dir, iteration);
    let trajectories: Vec<Trajectory> = jsonl::read(&require(dir.join(TRAJECTORIES_FILE))?)?;
    let verdicts: Vec<CriticVerdict> = jsonl::read(&require(dir.join(VERDICTS_FILE))?)?;
    if trajectories.len() != verdicts.len() {
        return Err(StageError::Mismatch(format!(
            "{} trajectories but {} verdicts",
            trajectories.len(),
            verdicts.len()
        )));
    }
    let mut pool = Vec::with_capacity(verdicts.len());
    for (t, v) in trajectories.into_iter().zip(verdicts) {
        if t.traj_hash != v.traj_hash {
            return Err(StageError::Mismatch(format!(
                "verdict for {} does not match trajectory {}",
                v.traj_hash, t.traj_hash
            )));
        }
        pool.push((t, v));
    }
    let ledger_path = run_dir.join(LEDGER_FILE);
    let mut ledger = if iteration > 1 {
        ExclusionLedger::load(&require(ledger_path.clone())?)?.before(iteration)
    } else {
        ExclusionLedger::new()
    };
    let chosen = select(&pool, &mut ledger, iteration, &cfg.selection);
    jsonl::write(&dir.join(SELECTED_FILE), &chosen)?;
    ledger.save(&ledger_path)?;
    Ok(chosen)
}

pub fn build(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<(usize, usize), StageError> {
    let dir = iter_dir(run_dir, iteration);
    let selected: Vec<Trajectory> = jsonl::read(&require(dir.join(SELECTED_FILE))?)?;
    let mut examples = Vec::with_capacity(selected.len());
    for t in &selected {
        let ins = train_instruction(ws, &t.instruction_id)?;
        examples.push(build_sft_example(t, ins)?);
    }
    let ds = mix(examples, &ws.general_pool, cfg.seed, iteration)?;
    export(&ds, &dir.join(DATASET_FILE))?;
    Ok(ds.counts())
}

/// Written next to the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub iteration: usize,
    pub no_op: bool,
    pub supervised_actions: usize,
    pub skipped_unknown: usize,
    pub initial_loss: f64,
    pub loss_curve: Vec<f64>,
    pub lr_initial: f64,
    pub lr_final: f64,
}

impl TrainLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_curve.last().copied()
    }
}

/// Only the tabular actor is trained in-process. Other actors keep their
/// weights; the exported dataset is the hand-off to external fine-tuning.
pub fn train_stage(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<TrainLog, StageError> {
    let dir = iter_dir(run_dir, iteration);
    let dataset = import(&require(dir.join(DATASET_FILE))?, iteration)?;
    let model = model_before(ws, run_dir, iteration)?;
    let trainable = matches!(cfg.actor, crate::config::ActorConfig::Tabular {});
    let (next, log) = if trainable {
        let out = train(&model, &dataset, &cfg.train)?;
        let log = TrainLog {
            iteration,
            no_op: out.no_op,
            supervised_actions: out.supervised_actions,
            skipped_unknown: out.skipped_unknown,
            initial_loss: out.initial_loss,
            loss_curve: out.loss_curve,
            lr_initial: cfg.train.lr_initial,
            lr_final: cfg.train.lr_final,
        };
        (out.model, log)
    } else {
        let log = TrainLog {
            iteration,
            no_op: true,
            supervised_actions: 0,
            skipped_unknown: 0,
            initial_loss: 0.0,
            loss_curve: Vec::new(),
            lr_initial: cfg.train.lr_initial,
            lr_final: cfg.train.lr_final,
        };
        (model, log)
    };
    next.save(&dir.join(CHECKPOINT_FILE))?;
    jsonl::write_json(&dir.join(TRAIN_LOG_FILE), &log)?;
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub n_sampled: usize,
    pub n_selected: usize,
    pub n_dataset_trajectory: usize,
    pub n_dataset_general: usize,
    pub eval_accuracy: f64,
    pub eval_correct: usize,
    pub eval_total: usize,
    pub train_loss_final: Option<f64>,
    pub train_no_op: bool,
    pub model_version: u64,
    pub wall_time_secs: f64,
}

/// Greedy evaluation of the iteration's checkpoint, summarized with the
/// other stages' artifacts into `report.json`.
pub fn eval_stage(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
    started: Instant,
) -> Result<IterationReport, StageError> {
    let dir = iter_dir(run_dir, iteration);
    let model = PolicyModel::load(&require(dir.join(CHECKPOINT_FILE))?)?;
    let log: TrainLog = jsonl::read_json(&require(dir.join(TRAIN_LOG_FILE))?)?;
    let sampled: Vec<Trajectory> = jsonl::read(&require(dir.join(TRAJECTORIES_FILE))?)?;
    let selected: Vec<Trajectory> = jsonl::read(&require(dir.join(SELECTED_FILE))?)?;
    let dataset = import(&require(dir.join(DATASET_FILE))?, iteration)?;
    let (n_traj, n_gen) = dataset.counts();
    let EvalOutcome { correct, total } = evaluate_model(cfg, ws, &model)?;
    let report = IterationReport {
        iteration,
        n_sampled: sampled.len(),
        n_selected: selected.len(),
        n_dataset_trajectory: n_traj,
        n_dataset_general: n_gen,
        eval_accuracy: correct as f64 / total as f64,
        eval_correct: correct,
        eval_total: total,
        train_loss_final: log.final_loss(),
        train_no_op: log.no_op,
        model_version: model.version,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    jsonl::write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

pub fn evaluate_model(
    cfg: &Config,
    ws: &Workspace,
    model: &PolicyModel,
) -> Result<EvalOutcome, StageError> {
    let backend = cfg.actor_backend(model)?;
    let eval = ws.split(Split::Eval);
    if eval.is_empty() {
        return Err(StageError::Mismatch("eval split is empty".into()));
    }
    Ok(evaluate(&backend, &eval, &ws.registry, cfg.sampling.m))
}
