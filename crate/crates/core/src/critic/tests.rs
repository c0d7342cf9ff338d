use super::*;
use crate::env::{Action, ObsStatus, Observation, Step};
use crate::fixtures;
use proptest::prelude::*;

fn step(action: Action, status: ObsStatus, payload: &str) -> Step {
    Step {
        action,
        observation: Observation {
            status,
            payload: payload.into(),
        },
    }
}

fn arith() -> Instruction {
    fixtures::instructions().remove(0)
}

fn calc_then(answer: &str) -> Trajectory {
    let call = Action::call(
        "calculator",
        serde_json::json!({"expr":"2+3*4"}).as_object().unwrap().clone(),
    );
    Trajectory::new(
        "arith-1",
        0,
        1,
        vec![
            step(call, ObsStatus::Ok, "14"),
            step(Action::finish(answer), ObsStatus::Ok, "final answer recorded"),
        ],
        false,
        "scripted",
    )
}

#[test]
fn oracle_rules() {
    let ins = arith();
    let v = score(&calc_then("14"), &ins, &CriticBackend::Oracle).unwrap();
    assert_eq!((v.score, v.parse_ok), (10, true));
    let v = score(&calc_then("15"), &ins, &CriticBackend::Oracle).unwrap();
    assert_eq!(v.score, 2);
    let truncated = Trajectory::new(
        "arith-1",
        0,
        1,
        vec![step(Action::call("todo_list", Default::default()), ObsStatus::Ok, "x"); 5],
        false,
        "scripted",
    );
    let v = score(&truncated, &ins, &CriticBackend::Oracle).unwrap();
    assert_eq!(v.score, 0);
}

#[test]
fn backend_errors_are_not_scorable() {
    let t = Trajectory::new("arith-1", 0, 1, vec![], true, "remote:x");
    assert!(matches!(
        score(&t, &arith(), &CriticBackend::Oracle),
        Err(CriticError::NotScorable(_))
    ));
    let all = score_all(&[t], |_| Some(arith()), &CriticBackend::Oracle);
    assert_eq!((all[0].score, all[0].parse_ok), (0, false));
}

#[test]
fn prompt_structure() {
    let t = Trajectory::new(
        "arith-1",
        0,
        1,
        vec![
            step(Action::call("todo_list", Default::default()), ObsStatus::Ok, "a"),
            step(Action::call("foo", Default::default()), ObsStatus::ApiError, "b"),
            step(Action::finish("14"), ObsStatus::Ok, "final answer recorded"),
        ],
        false,
        "scripted",
    );
    let ins = arith();
    let p = render_critic_prompt(&ins, &t);
    assert_eq!(p, render_critic_prompt(&ins, &t));
    assert_eq!(p.matches("[Step ").count(), 3);
    assert!(p.contains("SCORE:"));
    assert!(p.contains(&ins.text));
    for stage in [
        "API selection",
        "API calling parameters",
        "Exception handling",
        "Conclusion",
    ] {
        assert!(p.contains(stage), "{stage}");
    }
    assert!(p.contains("Observation [api_error]: b"));
}

fn labeled(h: Label, c: Label, n: u64, out: &mut Vec<LabeledTrajectory>) {
    for _ in 0..n {
        let i = out.len() as u64;
        out.push(LabeledTrajectory {
            traj_hash: TrajHash(i),
            human_label: h,
            critic_label: c,
        });
    }
}

#[test]
fn table_one_counts() {
    let mut v = Vec::new();
    labeled(Label::Success, Label::Success, 35, &mut v);
    labeled(Label::Success, Label::Fail, 1, &mut v);
    labeled(Label::Fail, Label::Success, 15, &mut v);
    labeled(Label::Fail, Label::Fail, 49, &mut v);
    let e = evaluate_critic(&v).unwrap();
    assert_eq!(e.precision, Ratio::new(35, 50));
    assert_eq!(e.recall, Ratio::new(35, 36));
    assert!((e.precision.unwrap().percent() - 70.0).abs() < 0.01);
    assert!((e.recall.unwrap().percent() - 97.2222).abs() < 0.01);
}

#[test]
fn perfect_and_degenerate() {
    let mut v = Vec::new();
    labeled(Label::Success, Label::Success, 6, &mut v);
    labeled(Label::Fail, Label::Fail, 4, &mut v);
    let e = evaluate_critic(&v).unwrap();
    assert_eq!(e.precision.unwrap().percent(), 100.0);
    assert_eq!(e.recall.unwrap().percent(), 100.0);

    let mut v = Vec::new();
    labeled(Label::Success, Label::Fail, 5, &mut v);
    let e = evaluate_critic(&v).unwrap();
    assert_eq!(e.precision, None);
    assert_eq!(e.recall.unwrap().percent(), 0.0);

    assert!(matches!(evaluate_critic(&[]), Err(CriticError::EmptyLabels)));
}

#[test]
fn bundled_table_one_fixture() {
    let labels: Vec<LabeledTrajectory> =
        crate::jsonl::parse_lines(fixtures::CRITIC_TABLE1_JSONL).unwrap();
    let e = evaluate_critic(&labels).unwrap();
    assert_eq!(
        e.counts,
        ConfusionCounts {
            tp: 35,
            fn_: 1,
            fp: 15,
            tn: 49
        }
    );
}

fn arb_label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Success), Just(Label::Fail)]
}

proptest! {
    // Recount by brute force and check the defining ratios.
    #[test]
    fn metrics_match_recount(pairs in prop::collection::vec((arb_label(), arb_label()), 1..200)) {
        let items: Vec<_> = pairs.iter().enumerate().map(|(i, (h, c))| LabeledTrajectory {
            traj_hash: TrajHash(i as u64), human_label: *h, critic_label: *c,
        }).collect();
        let e = evaluate_critic(&items).unwrap();
        let tp = pairs.iter().filter(|(h, c)| *h == Label::Success && *c == Label::Success).count() as u64;
        let pred = pairs.iter().filter(|(_, c)| *c == Label::Success).count() as u64;
        let truth = pairs.iter().filter(|(h, _)| *h == Label::Success).count() as u64;
        prop_assert_eq!(e.counts.total(), pairs.len() as u64);
        prop_assert_eq!(e.precision, Ratio::new(tp, pred));
        prop_assert_eq!(e.recall, Ratio::new(tp, truth));
    }

    #[test]
    fn oracle_scores_bounded_and_consistent(answer in ".{0,20}") {
        let ins = arith();
        let v = score(&calc_then(&answer), &ins, &CriticBackend::Oracle).unwrap();
        prop_assert!(v.score <= 10);
        prop_assert_eq!(v.score == 10, check_answer(&ins, answer.trim()));
    }
}
