use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use super::InstructionProfile;
use crate::env::{Action, ParamType, Registry, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    /// The payload of the most recent observation.
    LastObservation,
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
}

/// A renderable action pattern. Call arguments are filled from the
/// instruction slot of the same name; missing slots are left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionTemplate {
    Finish { answer: AnswerSource },
    Call { api_name: String, params: Vec<TemplateParam> },
}

/// Two finish patterns followed by one call pattern per api, in registry order.
pub fn templates_for_registry(registry: &Registry) -> Vec<ActionTemplate> {
    let mut out = vec![
        ActionTemplate::Finish {
            answer: AnswerSource::LastObservation,
        },
        ActionTemplate::Finish {
            answer: AnswerSource::Literal("I don't know".into()),
        },
    ];
    out.extend(registry.specs().iter().map(|spec| ActionTemplate::Call {
        api_name: spec.name.clone(),
        params: spec
            .params
            .iter()
            .map(|p| TemplateParam {
                name: p.name.clone(),
                ty: p.ty,
            })
            .collect(),
    }));
    out
}

fn typed_slot(raw: &str, ty: ParamType) -> Value {
    match ty {
        ParamType::String => Value::from(raw),
        ParamType::Number => {
            if let Ok(i) = raw.parse::<i64>() {
                Value::from(i)
            } else {
                raw.parse::<f64>()
                    .ok()
                    .and_then(Number::from_f64)
                    .map(Value::Number)
                    .unwrap_or_else(|| Value::from(raw))
            }
        }
        ParamType::Boolean => match raw {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::from(raw),
        },
    }
}

impl ActionTemplate {
    pub fn render(&self, profile: &InstructionProfile, history: &[Step]) -> Action {
        match self {
            ActionTemplate::Finish { answer } => match answer {
                AnswerSource::LastObservation => Action::finish(
                    history
                        .last()
                        .map(|s| s.observation.payload.as_str())
                        .unwrap_or(""),
                ),
                AnswerSource::Literal(text) => Action::finish(text),
            },
            ActionTemplate::Call { api_name, params } => {
                let args: Map<String, Value> = params
                    .iter()
                    .filter_map(|p| {
                        profile
                            .slots
                            .get(&p.name)
                            .map(|raw| (p.name.clone(), typed_slot(raw, p.ty)))
                    })
                    .collect();
                Action::call(api_name.clone(), args)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ActionTemplate::Finish {
                answer: AnswerSource::LastObservation,
            } => "FINISH <last observation>".into(),
            ActionTemplate::Finish {
                answer: AnswerSource::Literal(t),
            } => format!("FINISH {t}"),
            ActionTemplate::Call { api_name, params } => {
                let names: Vec<_> = params.iter().map(|p| p.name.as_str()).collect();
                format!("CALL {api_name}({})", names.join(", "))
            }
        }
    }
}

/// Index of the first template rendering to `action` in this context.
pub(crate) fn match_template(
    templates: &[ActionTemplate],
    action: &Action,
    profile: &InstructionProfile,
    history: &[Step],
) -> Option<usize> {
    templates
        .iter()
        .position(|t| &t.render(profile, history) == action)
}
