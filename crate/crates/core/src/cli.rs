//! Command-line surface. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or config error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::critic::{evaluate_critic, load_labels, CriticError, Ratio};
use crate::evolve::{self, EvolveError, IterationReport, StageError};
use crate::trainer::PolicyModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "agent-evolve", version, about = "Critic-guided self-evolution of tool-using agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the registry and instruction splits a config resolves to.
    Env {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full loop for R iterations.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Sample N x K trajectories on the train split.
    Sample(StageArgs),
    /// Score an iteration's trajectories with the critic.
    Score(StageArgs),
    /// Select the top-p% against the exclusion ledger.
    Select(StageArgs),
    /// Build and export the mixed SFT dataset.
    Build(StageArgs),
    /// Train the tabular policy on the dataset.
    Train(StageArgs),
    /// Evaluate an iteration's checkpoint (0 = untrained baseline).
    Eval(StageArgs),
    /// Precision and recall of critic labels against human labels.
    CriticEval {
        #[arg(long)]
        labels: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    run_dir: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct StageArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    iteration: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.to_string(),
        }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        if e.is_usage() {
            Failure::usage(e)
        } else {
            Failure::runtime(e)
        }
    }
}

impl From<EvolveError> for Failure {
    fn from(e: EvolveError) -> Self {
        if e.is_usage() {
            Failure::usage(e)
        } else {
            Failure::runtime(e)
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::runtime(e)
}

fn load_config(common: &CommonArgs) -> Result<Config, Failure> {
    let mut cfg = Config::load(&common.config).map_err(Failure::usage)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Stage commands create the run dir on demand, but never its parents.
fn stage_run_dir(run_dir: &Path) -> Result<(), Failure> {
    if run_dir.is_dir() {
        return Ok(());
    }
    match run_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Failure::usage(format!(
            "run dir {}: parent {} does not exist",
            run_dir.display(),
            p.display()
        ))),
        _ => std::fs::create_dir(run_dir)
            .map_err(|e| Failure::usage(format!("run dir {}: {e}", run_dir.display()))),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Env { config } => {
            let cfg = Config::load(&config).map_err(Failure::usage)?;
            let ws = cfg.load_workspace().map_err(Failure::usage)?;
            writeln!(out, "apis ({}):", ws.registry.len()).map_err(io)?;
            for spec in ws.registry.specs() {
                writeln!(out, "  {:<14} {}", spec.name, spec.description).map_err(io)?;
            }
            let train = ws.split(crate::env::Split::Train).len();
            let eval = ws.split(crate::env::Split::Eval).len();
            writeln!(out, "instructions: {train} train, {eval} eval").map_err(io)?;
            writeln!(out, "general pool: {}", ws.general_pool.len()).map_err(io)?;
            Ok(())
        }
        Command::Evolve { common, iterations } => {
            let mut cfg = load_config(&common)?;
            if let Some(r) = iterations {
                cfg.iterations = r;
                cfg.validate().map_err(Failure::usage)?;
            }
            match evolve::run_evolution(&cfg, &common.run_dir) {
                Ok(manifest) => {
                    print_table(out, manifest.baseline_accuracy, &manifest.reports).map_err(io)
                }
                Err((e, partial)) => {
                    if let Some(m) = partial {
                        let _ = print_table(out, m.baseline_accuracy, &m.reports);
                    }
                    Err(e.into())
                }
            }
        }
        Command::Sample(a) => stage(a, out, |cfg, ws, dir, i, out| {
            let t = evolve::sample(cfg, ws, dir, i)?;
            Ok(writeln!(out, "sampled {} trajectories", t.len()))
        }),
        Command::Score(a) => stage(a, out, |cfg, ws, dir, i, out| {
            let v = evolve::score(cfg, ws, dir, i)?;
            Ok(writeln!(out, "scored {} trajectories", v.len()))
        }),
        Command::Select(a) => stage(a, out, |cfg, _, dir, i, out| {
            let s = evolve::select_stage(cfg, dir, i)?;
            Ok(writeln!(out, "selected {} trajectories", s.len()))
        }),
        Command::Build(a) => stage(a, out, |cfg, ws, dir, i, out| {
            let (t, g) = evolve::build(cfg, ws, dir, i)?;
            Ok(writeln!(out, "dataset: {t} trajectory + {g} general examples"))
        }),
        Command::Train(a) => stage(a, out, |cfg, ws, dir, i, out| {
            let log = evolve::train_stage(cfg, ws, dir, i)?;
            Ok(match log.final_loss() {
                Some(loss) if !log.no_op => writeln!(
                    out,
                    "trained on {} actions: loss {:.6} -> {loss:.6}",
                    log.supervised_actions, log.initial_loss
                ),
                _ => writeln!(out, "training skipped (no-op)"),
            })
        }),
        Command::Eval(a) => stage(a, out, |cfg, ws, dir, i, out| {
            if i == 0 {
                let model = PolicyModel::for_registry(&ws.registry);
                let e = evolve::evaluate_model(cfg, ws, &model)?;
                return Ok(writeln!(
                    out,
                    "iteration 0 accuracy {:.4} ({}/{})",
                    e.accuracy(),
                    e.correct,
                    e.total
                ));
            }
            let r = evolve::eval_stage(cfg, ws, dir, i, Instant::now())?;
            Ok(writeln!(
                out,
                "iteration {i} accuracy {:.4} ({}/{})",
                r.eval_accuracy, r.eval_correct, r.eval_total
            ))
        }),
        Command::CriticEval { labels } => {
            let labeled = load_labels(&labels).map_err(Failure::usage)?;
            let eval = evaluate_critic(&labeled).map_err(|e| match e {
                CriticError::EmptyLabels => {
                    Failure::usage(format!("{}: no labeled trajectories", labels.display()))
                }
                other => Failure::runtime(other),
            })?;
            let c = eval.counts;
            writeln!(out, "TP {}  FN {}  FP {}  TN {}", c.tp, c.fn_, c.fp, c.tn).map_err(io)?;
            writeln!(out, "precision {}", percent(eval.precision, "no predicted successes"))
                .map_err(io)?;
            writeln!(out, "recall {}", percent(eval.recall, "no human-labeled successes"))
                .map_err(io)?;
            Ok(())
        }
    }
}

fn percent(r: Option<Ratio>, why: &str) -> String {
    match r {
        Some(r) => format!("{:.2}% ({}/{})", r.percent(), r.num, r.den),
        None => format!("undefined ({why})"),
    }
}

type StageFn = fn(
    &Config,
    &crate::config::Workspace,
    &Path,
    usize,
    &mut dyn Write,
) -> Result<std::io::Result<()>, StageError>;

fn stage(a: StageArgs, out: &mut dyn Write, f: StageFn) -> Result<(), Failure> {
    let cfg = load_config(&a.common)?;
    stage_run_dir(&a.common.run_dir)?;
    let ws = cfg.load_workspace().map_err(Failure::usage)?;
    f(&cfg, &ws, &a.common.run_dir, a.iteration, out)?.map_err(io)
}

fn print_table(
    out: &mut dyn Write,
    baseline: f64,
    reports: &[IterationReport],
) -> std::io::Result<()> {
    writeln!(out, "baseline accuracy {baseline:.4}")?;
    writeln!(out, "iteration  accuracy  selected  train_loss")?;
    for r in reports {
        let loss = r
            .train_loss_final
            .map_or_else(|| "-".to_string(), |l| format!("{l:.4}"));
        writeln!(
            out,
            "{:>9}  {:>8.4}  {:>8}  {:>10}",
            r.iteration, r.eval_accuracy, r.n_selected, loss
        )?;
    }
    Ok(())
}
