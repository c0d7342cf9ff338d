use std::path::Path;

use agent_evolve::cli::{run, EXIT_OK};
use agent_evolve::config::Config;
use agent_evolve::evolve::run_evolution;
use serde_json::Value;

const DESK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/desk.json");

const BYTE_EQUAL: &[&str] = &[
    "trajectories.jsonl",
    "verdicts.jsonl",
    "selected.jsonl",
    "dataset.jsonl",
    "checkpoint.json",
    "train_log.json",
];

fn cmd(args: &[&str]) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("agent-evolve").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    assert_eq!(code, EXIT_OK, "{args:?}: {}", String::from_utf8_lossy(&err));
}

fn report_without_wall_time(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_secs");
    v
}

#[test]
fn composed_stages_match_monolithic_run() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono");
    let staged = dir.path().join("staged");
    let mut cfg = Config::desk();
    cfg.iterations = 3;
    run_evolution(&cfg, &mono).unwrap();

    let s = staged.to_str().unwrap();
    for i in 1..=3 {
        let i = i.to_string();
        for stage in ["sample", "score", "select", "build", "train", "eval"] {
            cmd(&[stage, "--config", DESK, "--run-dir", s, "--iteration", &i]);
        }
    }
    for i in 1..=3 {
        let a = mono.join(format!("iter_{i}"));
        let b = staged.join(format!("iter_{i}"));
        for name in BYTE_EQUAL {
            assert_eq!(
                std::fs::read(a.join(name)).unwrap(),
                std::fs::read(b.join(name)).unwrap(),
                "iter_{i}/{name}"
            );
        }
        assert_eq!(
            report_without_wall_time(&a.join("report.json")),
            report_without_wall_time(&b.join("report.json"))
        );
    }
    assert_eq!(
        std::fs::read(mono.join("ledger.jsonl")).unwrap(),
        std::fs::read(staged.join("ledger.jsonl")).unwrap()
    );
}

#[test]
fn first_three_stages_match_iteration_one() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono");
    let staged = dir.path().join("staged");
    let mut cfg = Config::desk();
    cfg.iterations = 1;
    run_evolution(&cfg, &mono).unwrap();
    let s = staged.to_str().unwrap();
    for stage in ["sample", "score", "select"] {
        cmd(&[stage, "--config", DESK, "--run-dir", s, "--iteration", "1"]);
    }
    for name in &BYTE_EQUAL[..3] {
        assert_eq!(
            std::fs::read(mono.join("iter_1").join(name)).unwrap(),
            std::fs::read(staged.join("iter_1").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_matches_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut cfg = Config::desk();
    cfg.seed = 7;
    cfg.iterations = 1;
    run_evolution(&cfg, &a).unwrap();
    cmd(&["sample", "--config", DESK, "--seed", "7", "--run-dir", b.to_str().unwrap(), "--iteration", "1"]);
    assert_eq!(
        std::fs::read(a.join("iter_1/trajectories.jsonl")).unwrap(),
        std::fs::read(b.join("iter_1/trajectories.jsonl")).unwrap()
    );
}

#[test]
fn identical_configs_give_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::desk();
    let a = run_evolution(&cfg, &dir.path().join("a")).unwrap();
    let b = run_evolution(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(a.accuracy_column(), b.accuracy_column());
    assert_eq!(
        std::fs::read(dir.path().join("a/accuracy.csv")).unwrap(),
        std::fs::read(dir.path().join("b/accuracy.csv")).unwrap()
    );
    for i in 1..=4 {
        for name in BYTE_EQUAL {
            let p = format!("iter_{i}/{name}");
            assert_eq!(
                std::fs::read(dir.path().join("a").join(&p)).unwrap(),
                std::fs::read(dir.path().join("b").join(&p)).unwrap(),
                "{p}"
            );
        }
    }
}

#[test]
fn different_seeds_sample_differently() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::desk();
    cfg.iterations = 1;
    run_evolution(&cfg, &dir.path().join("a")).unwrap();
    cfg.seed = 1;
    run_evolution(&cfg, &dir.path().join("b")).unwrap();
    assert_ne!(
        std::fs::read(dir.path().join("a/iter_1/trajectories.jsonl")).unwrap(),
        std::fs::read(dir.path().join("b/iter_1/trajectories.jsonl")).unwrap()
    );
}
