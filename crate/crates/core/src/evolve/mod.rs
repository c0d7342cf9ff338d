//! The evolution driver: sample, score, select, build, train and evaluate,
//! repeated for R iterations over one shared exclusion ledger.

mod stages;

pub use stages::{
    build, eval_stage, evaluate_model, iter_dir, model_before, sample, score, select_stage,
    train_stage, IterationReport, TrainLog, CHECKPOINT_FILE, REPORT_FILE, TRAIN_LOG_FILE,
};

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::actor::{run_episode, ActorBackend, SampleError};
use crate::config::{Config, ConfigError, Workspace};
use crate::critic::VERDICTS_FILE;
use crate::dataset::{DatasetError, DATASET_FILE};
use crate::env::{check_answer, Instruction, Registry};
use crate::jsonl::{self, JsonlError};
use crate::rng::{stream_rng, DOMAIN_EVAL};
use crate::selection::SELECTED_FILE;
use crate::store::TRAJECTORIES_FILE;
use crate::trainer::{PolicyModel, TrainError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ACCURACY_FILE: &str = "accuracy.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sample,
    Score,
    Select,
    Build,
    Train,
    Eval,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Sample => "sample",
            Stage::Score => "score",
            Stage::Select => "select",
            Stage::Build => "build",
            Stage::Train => "train",
            Stage::Eval => "eval",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("leakage guard: {0}")]
    Leakage(String),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

impl StageError {
    /// Missing inputs and bad configs are the operator's to fix.
    pub fn is_usage(&self) -> bool {
        matches!(self, StageError::MissingInput(_) | StageError::Config(_))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvolveError {
    #[error("iteration {iteration}, stage {stage}: {source}")]
    Stage {
        iteration: usize,
        stage: Stage,
        #[source]
        source: StageError,
    },
    #[error("baseline evaluation: {0}")]
    Baseline(#[source] StageError),
    #[error("run dir {}: {message}", path.display())]
    RunDir { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("writing {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: JsonlError,
    },
}

impl EvolveError {
    pub fn is_usage(&self) -> bool {
        match self {
            EvolveError::Stage { source, .. } | EvolveError::Baseline(source) => source.is_usage(),
            EvolveError::RunDir { .. } | EvolveError::Config(_) => true,
            EvolveError::Write { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub correct: usize,
    pub total: usize,
}

impl EvalOutcome {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// One greedy episode per instruction; the fraction whose final answer
/// passes the checker.
pub fn evaluate(
    backend: &ActorBackend,
    instructions: &[Instruction],
    registry: &Registry,
    round_cap: usize,
) -> EvalOutcome {
    let correct = instructions
        .iter()
        .enumerate()
        .filter(|(n, ins)| {
            let mut rng = stream_rng(0, DOMAIN_EVAL, *n as u64);
            let t = run_episode(ins, backend, registry, round_cap, 0.0, &mut rng, 0, 0);
            t.final_answer
                .as_deref()
                .is_some_and(|answer| check_answer(ins, answer))
        })
        .count();
    EvalOutcome {
        correct,
        total: instructions.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub iteration: usize,
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Config,
    pub baseline: EvalOutcome,
    pub baseline_accuracy: f64,
    pub reports: Vec<IterationReport>,
    /// Run-dir relative paths of every completed iteration's artifacts.
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
}

impl RunManifest {
    pub fn accuracy_column(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.eval_accuracy).collect()
    }
}

const ITERATION_ARTIFACTS: &[&str] = &[
    TRAJECTORIES_FILE,
    VERDICTS_FILE,
    SELECTED_FILE,
    DATASET_FILE,
    CHECKPOINT_FILE,
    TRAIN_LOG_FILE,
    REPORT_FILE,
];

/// `iteration,eval_accuracy,eval_correct,eval_total`, one row per iteration.
pub fn accuracy_csv(reports: &[IterationReport]) -> String {
    let mut out = String::from("iteration,eval_accuracy,eval_correct,eval_total\n");
    for r in reports {
        out.push_str(&format!(
            "{},{:.6},{},{}\n",
            r.iteration, r.eval_accuracy, r.eval_correct, r.eval_total
        ));
    }
    out
}

/// Accepts a missing directory whose parent exists, or an empty directory.
pub fn prepare_run_dir(run_dir: &Path) -> Result<(), EvolveError> {
    let err = |message: String| EvolveError::RunDir {
        path: run_dir.to_path_buf(),
        message,
    };
    if run_dir.exists() {
        let mut entries = std::fs::read_dir(run_dir).map_err(|e| err(e.to_string()))?;
        if entries.next().is_some() {
            return Err(err("directory is not empty".into()));
        }
        return Ok(());
    }
    match run_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            return Err(err(format!("parent {} does not exist", p.display())))
        }
        _ => {}
    }
    std::fs::create_dir(run_dir).map_err(|e| err(e.to_string()))
}

fn write_manifest(run_dir: &Path, manifest: &RunManifest) -> Result<(), EvolveError> {
    let path = run_dir.join(MANIFEST_FILE);
    jsonl::write_json(&path, manifest).map_err(|source| EvolveError::Write { path, source })
}

/// One full iteration through the stage functions.
pub fn run_iteration(
    cfg: &Config,
    ws: &Workspace,
    run_dir: &Path,
    iteration: usize,
) -> Result<IterationReport, EvolveError> {
    let started = Instant::now();
    let at = |stage: Stage| move |source: StageError| EvolveError::Stage {
        iteration,
        stage,
        source,
    };
    sample(cfg, ws, run_dir, iteration).map_err(at(Stage::Sample))?;
    score(cfg, ws, run_dir, iteration).map_err(at(Stage::Score))?;
    select_stage(cfg, run_dir, iteration).map_err(at(Stage::Select))?;
    build(cfg, ws, run_dir, iteration).map_err(at(Stage::Build))?;
    train_stage(cfg, ws, run_dir, iteration).map_err(at(Stage::Train))?;
    eval_stage(cfg, ws, run_dir, iteration, started).map_err(at(Stage::Eval))
}

/// Runs `cfg.iterations` iterations into a fresh `run_dir`.
///
/// The manifest is rewritten after the baseline and after every iteration.
/// On failure it records the failing stage and lists only the artifacts of
/// completed iterations; the error is returned alongside it.
pub fn run_evolution(
    cfg: &Config,
    run_dir: &Path,
) -> Result<RunManifest, (EvolveError, Option<RunManifest>)> {
    cfg.validate().map_err(|e| (e.into(), None))?;
    prepare_run_dir(run_dir).map_err(|e| (e, None))?;
    let ws = cfg.load_workspace().map_err(|e| (e.into(), None))?;
    let baseline = evaluate_model(cfg, &ws, &PolicyModel::for_registry(&ws.registry))
        .map_err(|e| (EvolveError::Baseline(e), None))?;
    let mut manifest = RunManifest {
        config: cfg.clone(),
        baseline,
        baseline_accuracy: baseline.accuracy(),
        reports: Vec::new(),
        artifacts: Vec::new(),
        failure: None,
    };
    write_manifest(run_dir, &manifest).map_err(|e| (e, None))?;
    for iteration in 1..=cfg.iterations {
        match run_iteration(cfg, &ws, run_dir, iteration) {
            Ok(report) => {
                manifest.reports.push(report);
                for name in ITERATION_ARTIFACTS {
                    manifest.artifacts.push(format!("iter_{iteration}/{name}"));
                }
                let csv = run_dir.join(ACCURACY_FILE);
                std::fs::write(&csv, accuracy_csv(&manifest.reports)).map_err(|source| {
                    (
                        EvolveError::Write {
                            path: csv.clone(),
                            source: JsonlError::Io {
                                path: csv.display().to_string(),
                                source,
                            },
                        },
                        Some(manifest.clone()),
                    )
                })?;
                write_manifest(run_dir, &manifest).map_err(|e| (e, Some(manifest.clone())))?;
            }
            Err(e) => {
                if let EvolveError::Stage { iteration, stage, source } = &e {
                    manifest.failure = Some(StageFailure {
                        iteration: *iteration,
                        stage: *stage,
                        message: source.to_string(),
                    });
                }
                let _ = write_manifest(run_dir, &manifest);
                return Err((e, Some(manifest)));
            }
        }
    }
    Ok(manifest)
}
