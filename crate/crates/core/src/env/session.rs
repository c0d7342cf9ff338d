use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::handlers::{dispatch, WorldState};
use super::{EnvError, Instruction, Registry};

/// One actor move.
///
/// `Malformed` records raw actor output that did not parse; the environment
/// answers it with a `parse_error` observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ApiCall {
        api_name: String,
        args: Map<String, Value>,
    },
    Finish {
        answer: String,
    },
    Malformed {
        raw: String,
    },
}

impl Action {
    pub fn call(api_name: impl Into<String>, args: Map<String, Value>) -> Self {
        Action::ApiCall {
            api_name: api_name.into(),
            args,
        }
    }

    /// Answers are stored trimmed, which keeps rendering and parsing inverse.
    pub fn finish(answer: impl AsRef<str>) -> Self {
        Action::Finish {
            answer: answer.as_ref().trim().to_string(),
        }
    }

    pub fn is_finish(&self) -> bool {
        matches!(self, Action::Finish { .. })
    }

    /// Grammar rendering: `CALL <api> <json-args>` or `FINISH <answer>`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ApiCall { api_name, args } => {
                let json = serde_json::to_string(args).map_err(|_| fmt::Error)?;
                write!(f, "CALL {api_name} {json}")
            }
            Action::Finish { answer } if answer.is_empty() => f.write_str("FINISH"),
            Action::Finish { answer } => write!(f, "FINISH {answer}"),
            Action::Malformed { raw } => f.write_str(raw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsStatus {
    Ok,
    ApiError,
    ParseError,
}

impl ObsStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ObsStatus::Ok => "ok",
            ObsStatus::ApiError => "api_error",
            ObsStatus::ParseError => "parse_error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(ObsStatus::Ok),
            "api_error" => Some(ObsStatus::ApiError),
            "parse_error" => Some(ObsStatus::ParseError),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub status: ObsStatus,
    pub payload: String,
}

impl Observation {
    fn new(status: ObsStatus, payload: impl Into<String>) -> Self {
        let payload = payload.into();
        debug_assert!(!payload.is_empty());
        Observation { status, payload }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub observation: Observation,
}

/// One episode of an instruction against a registry.
#[derive(Debug, Clone)]
pub struct Session<'a> {
    registry: &'a Registry,
    instruction: &'a Instruction,
    steps: Vec<Step>,
    world: WorldState,
    finished: bool,
    round_cap: usize,
}

impl<'a> Session<'a> {
    pub fn new(registry: &'a Registry, instruction: &'a Instruction, round_cap: usize) -> Self {
        assert!(round_cap > 0, "round cap must be positive");
        Session {
            registry,
            instruction,
            steps: Vec::new(),
            world: WorldState::default(),
            finished: false,
            round_cap,
        }
    }

    pub fn instruction(&self) -> &'a Instruction {
        self.instruction
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn into_steps(self) -> Vec<Step> {
        self.steps
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn round_cap(&self) -> usize {
        self.round_cap
    }

    pub fn step(&mut self, action: Action) -> Result<Observation, EnvError> {
        if self.finished {
            return Err(EnvError::SessionFinished);
        }
        let observation = match &action {
            Action::ApiCall { api_name, args } => self.call(api_name, args),
            Action::Finish { .. } => Observation::new(ObsStatus::Ok, "final answer recorded"),
            Action::Malformed { .. } => {
                Observation::new(ObsStatus::ParseError, "parse error: unrecognized action")
            }
        };
        Ok(self.push(action, observation))
    }

    /// Records unparsable actor output as a `parse_error` step.
    pub fn record_parse_error(
        &mut self,
        raw: impl Into<String>,
        reason: &str,
    ) -> Result<Observation, EnvError> {
        if self.finished {
            return Err(EnvError::SessionFinished);
        }
        let observation = Observation::new(
            ObsStatus::ParseError,
            format!(
                "parse error: {reason}; reply with `CALL <api> <json-args>` or `FINISH <answer>`"
            ),
        );
        Ok(self.push(Action::Malformed { raw: raw.into() }, observation))
    }

    fn push(&mut self, action: Action, observation: Observation) -> Observation {
        let done = action.is_finish();
        self.steps.push(Step {
            action,
            observation: observation.clone(),
        });
        if done || self.steps.len() >= self.round_cap {
            self.finished = true;
        }
        observation
    }

    fn call(&mut self, api_name: &str, args: &Map<String, Value>) -> Observation {
        let Some(spec) = self.registry.get(api_name) else {
            let available: Vec<_> = self.registry.names().collect();
            return Observation::new(
                ObsStatus::ApiError,
                format!(
                    "unknown api \"{api_name}\"; available apis: {}",
                    available.join(", ")
                ),
            );
        };
        for name in args.keys() {
            if spec.param(name).is_none() {
                return Observation::new(
                    ObsStatus::ApiError,
                    format!("unexpected argument `{name}` for {api_name}"),
                );
            }
        }
        for p in &spec.params {
            match args.get(&p.name) {
                None if p.required => {
                    return Observation::new(
                        ObsStatus::ApiError,
                        format!("missing required argument `{}` for {api_name}", p.name),
                    )
                }
                Some(v) if !p.ty.accepts(v) => {
                    return Observation::new(
                        ObsStatus::ApiError,
                        format!(
                            "argument `{}` of {api_name} must be a {}",
                            p.name,
                            p.ty.as_str()
                        ),
                    )
                }
                _ => {}
            }
        }
        match dispatch(&spec.handler_id, args, &mut self.world) {
            Ok(payload) => Observation::new(ObsStatus::Ok, payload),
            Err(message) => Observation::new(ObsStatus::ApiError, format!("{api_name}: {message}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use serde_json::json;

    fn args(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn calculator_step() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let mut s = Session::new(&reg, ins, 5);
        let obs = s
            .step(Action::call("calculator", args(json!({"expr": "2+3*4"}))))
            .unwrap();
        assert_eq!(obs.status, ObsStatus::Ok);
        assert_eq!(obs.payload, "14");
        assert!(!s.is_finished());
    }

    #[test]
    fn unknown_api_lists_available() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let mut s = Session::new(&reg, ins, 5);
        let obs = s.step(Action::call("foo", Map::new())).unwrap();
        assert_eq!(obs.status, ObsStatus::ApiError);
        assert!(obs.payload.contains("\"foo\""));
        for name in reg.names() {
            assert!(obs.payload.contains(name));
        }
        assert!(!s.is_finished());
    }

    #[test]
    fn bad_args_are_api_errors() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let mut s = Session::new(&reg, ins, 5);
        let missing = s.step(Action::call("calculator", Map::new())).unwrap();
        assert!(missing.payload.contains("missing required argument `expr`"));
        let typed = s
            .step(Action::call("calculator", args(json!({"expr": 3}))))
            .unwrap();
        assert!(typed.payload.contains("must be a string"));
        let extra = s
            .step(Action::call("todo_list", args(json!({"x": 1}))))
            .unwrap();
        assert_eq!(extra.status, ObsStatus::ApiError);
    }

    #[test]
    fn finish_ends_the_session() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let mut s = Session::new(&reg, ins, 5);
        let obs = s.step(Action::finish("14")).unwrap();
        assert_eq!(obs.status, ObsStatus::Ok);
        assert!(s.is_finished());
        assert!(matches!(
            s.step(Action::finish("again")),
            Err(EnvError::SessionFinished)
        ));
    }

    #[test]
    fn round_cap_finishes() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let mut s = Session::new(&reg, ins, 2);
        s.step(Action::call("todo_list", Map::new())).unwrap();
        s.record_parse_error("gibberish", "no action").unwrap();
        assert!(s.is_finished());
        assert_eq!(s.steps().len(), 2);
        assert_eq!(s.steps()[1].observation.status, ObsStatus::ParseError);
        assert!(s.record_parse_error("x", "no action").is_err());
    }

    #[test]
    fn sessions_do_not_share_todos() {
        let reg = Registry::builtin();
        let ins = &fixtures::instructions()[0];
        let add = Action::call("todo_add", args(json!({"item": "milk"})));
        let list = Action::call("todo_list", Map::new());

        let mut a = Session::new(&reg, ins, 5);
        let mut b = Session::new(&reg, ins, 5);
        a.step(add.clone()).unwrap();
        b.step(add).unwrap();
        let la = a.step(list.clone()).unwrap();
        let lb = b.step(list).unwrap();
        assert_eq!(la.payload, "milk");
        assert_eq!(lb.payload, "milk");
    }

    #[test]
    fn render_grammar() {
        let a = Action::call("calculator", args(json!({"expr": "2+3"})));
        assert_eq!(a.render(), r#"CALL calculator {"expr":"2+3"}"#);
        assert_eq!(Action::finish(" 14 ").render(), "FINISH 14");
        assert_eq!(Action::finish("").render(), "FINISH");
    }
}
