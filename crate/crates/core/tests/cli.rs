use std::path::Path;

use agent_evolve::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use agent_evolve::fixtures;

const DESK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/desk.json");
const TABLE1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/critic_table1_labels.jsonl");

fn agent(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("agent-evolve").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evolve_prints_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let (code, out, err) = agent(&["evolve", "--config", DESK, "--iterations", "4", "--run-dir", s(&run_dir)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows: Vec<_> = out
        .lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .collect();
    assert_eq!(rows.len(), 4, "{out}");
    assert!(run_dir.join("accuracy.csv").is_file());
}

#[test]
fn iterations_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let (code, _, _) = agent(&["evolve", "--config", DESK, "--iterations", "2", "--run-dir", s(&run_dir)]);
    assert_eq!(code, EXIT_OK);
    let csv = std::fs::read_to_string(run_dir.join("accuracy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let (code, _, err) = agent(&["evolve", "--config", DESK, "--iterations", "0", "--run-dir", s(&dir.path().join("r0"))]);
    assert_eq!(code, EXIT_USAGE, "{err}");
}

#[test]
fn misspelled_key_exits_two_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, fixtures::DESK_CONFIG_JSON.replace("lr_initial", "lr_inital")).unwrap();
    let (code, _, err) = agent(&["evolve", "--config", s(&cfg), "--run-dir", s(&dir.path().join("run"))]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("lr_inital"), "{err}");
}

#[test]
fn missing_run_dir_parent_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("no/such/run");
    let (code, _, err) = agent(&["evolve", "--config", DESK, "--run-dir", s(&run_dir)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("does not exist"), "{err}");
}

#[test]
fn missing_config_file_exits_two() {
    let (code, _, _) = agent(&["evolve", "--config", "/no/such.json", "--run-dir", "/tmp/x"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn unknown_flag_exits_two() {
    let (code, _, _) = agent(&["evolve", "--config", DESK, "--run-dir", "/tmp/x", "--bogus"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = agent(&["sample", "--config", DESK, "--run-dir", "/tmp/x"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = agent(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("evolve"));
}

#[test]
fn critic_eval_table1() {
    let (code, out, _) = agent(&["critic-eval", "--labels", TABLE1]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("TP 35  FN 1  FP 15  TN 49"), "{out}");
    assert!(out.contains("precision 70.00%"), "{out}");
    assert!(out.contains("recall 97.22%"), "{out}");
}

#[test]
fn critic_eval_all_correct() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("l.jsonl");
    let line = |h: u64, l: &str| {
        format!("{{\"traj_hash\":\"{h:016x}\",\"human_label\":\"{l}\",\"critic_label\":\"{l}\"}}\n")
    };
    std::fs::write(&labels, line(1, "success") + &line(2, "fail") + &line(3, "success")).unwrap();
    let (code, out, _) = agent(&["critic-eval", "--labels", s(&labels)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("precision 100.00%"));
    assert!(out.contains("recall 100.00%"));
}

#[test]
fn critic_eval_undefined_precision() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("l.jsonl");
    std::fs::write(
        &labels,
        "{\"traj_hash\":\"0000000000000001\",\"human_label\":\"success\",\"critic_label\":\"fail\"}\n",
    )
    .unwrap();
    let (code, out, _) = agent(&["critic-eval", "--labels", s(&labels)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("precision undefined"), "{out}");
    assert!(out.contains("recall 0.00%"), "{out}");
}

#[test]
fn critic_eval_empty_or_missing_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("empty.jsonl");
    std::fs::write(&labels, "").unwrap();
    let (code, _, _) = agent(&["critic-eval", "--labels", s(&labels)]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = agent(&["critic-eval", "--labels", s(&dir.path().join("nope.jsonl"))]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn select_without_verdicts_exits_two_naming_file() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let base = ["--config", DESK, "--run-dir", s(&run_dir), "--iteration", "1"];
    let (code, _, _) = agent(&[&["sample"][..], &base].concat());
    assert_eq!(code, EXIT_OK);
    let (code, _, err) = agent(&[&["select"][..], &base].concat());
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("verdicts.jsonl"), "{err}");
}

#[test]
fn sample_after_iteration_one_needs_previous_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let (code, _, err) = agent(&["sample", "--config", DESK, "--run-dir", s(&run_dir), "--iteration", "2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("checkpoint.json"), "{err}");
}

#[test]
fn build_on_empty_selection_gives_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let it = run_dir.join("iter_1");
    std::fs::create_dir_all(&it).unwrap();
    std::fs::write(it.join("selected.jsonl"), "").unwrap();
    let (code, out, err) = agent(&["build", "--config", DESK, "--run-dir", s(&run_dir), "--iteration", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("0 trajectory + 0 general"), "{out}");
    assert_eq!(std::fs::read_to_string(it.join("dataset.jsonl")).unwrap(), "");

    let (code, out, err) = agent(&["train", "--config", DESK, "--run-dir", s(&run_dir), "--iteration", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("no-op"), "{out}");
}

#[test]
fn eval_iteration_zero_is_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = agent(&["eval", "--config", DESK, "--run-dir", s(&dir.path().join("run")), "--iteration", "0"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("iteration 0 accuracy 0.0000 (0/10)"), "{out}");
}

#[test]
fn env_lists_apis() {
    let (code, out, _) = agent(&["env", "--config", DESK]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("calculator"));
    assert!(out.contains("20 train, 10 eval"));
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let it = run_dir.join("iter_1");
    std::fs::create_dir_all(&it).unwrap();
    std::fs::write(it.join("selected.jsonl"), "not json\n").unwrap();
    let (code, _, _) = agent(&["build", "--config", DESK, "--run-dir", s(&run_dir), "--iteration", "1"]);
    assert_eq!(code, EXIT_RUNTIME);
}
