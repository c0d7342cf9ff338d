use std::sync::LazyLock;

use regex::Regex;

use super::context::key_for;
use super::template::match_template;
use super::{classify, PolicyModel};
use crate::actor::parse_action;
use crate::dataset::{MixedDataset, SftExample, SftSource, INSTRUCTION_PREFIX};
use crate::env::{Action, ObsStatus, Observation, Step};

/// One masked action resolved to a template at its context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisedAction {
    pub context: String,
    pub template: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Supervision {
    pub items: Vec<SupervisedAction>,
    /// Masked actions that match no template (or sit in unparsable text).
    pub skipped_unknown: usize,
}

static OBSERVATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\nObservation \[([a-z_]+)\]: ([^\n]*)\n").expect("static pattern")
});

/// Parses the unmasked text between two actions into its observations.
fn parse_gap(gap: &str) -> Option<Vec<Observation>> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for caps in OBSERVATION.captures_iter(gap) {
        let whole = caps.get(0).unwrap();
        if whole.start() != cursor {
            return None;
        }
        out.push(Observation {
            status: ObsStatus::parse(&caps[1])?,
            payload: caps[2].to_string(),
        });
        cursor = whole.end();
    }
    (cursor == gap.len()).then_some(out)
}

fn example_supervision(model: &PolicyModel, example: &SftExample, out: &mut Supervision) {
    let segments = example.segments();
    let n_masked = segments.iter().filter(|s| s.masked).count();
    let Some(instruction) = segments
        .first()
        .filter(|s| !s.masked)
        .and_then(|s| s.text.strip_prefix(INSTRUCTION_PREFIX))
        .and_then(|s| s.strip_suffix('\n'))
    else {
        out.skipped_unknown += n_masked;
        return;
    };
    let profile = classify(instruction);

    let mut history: Vec<Step> = Vec::new();
    let mut pending_gap: Option<&str> = None;
    let mut resolved = Vec::new();
    for seg in &segments[1..] {
        if !seg.masked {
            pending_gap = Some(seg.text);
            continue;
        }
        if let Some(gap) = pending_gap.take() {
            let Some(observations) = parse_gap(gap) else {
                out.skipped_unknown += n_masked;
                return;
            };
            // Consecutive observations mean empty (unrendered) actions between them.
            let mut observations = observations.into_iter();
            if let (Some(last), Some(obs)) = (history.last_mut(), observations.next()) {
                last.observation = obs;
            }
            for obs in observations {
                history.push(Step {
                    action: Action::Malformed { raw: String::new() },
                    observation: obs,
                });
            }
        }
        let key = key_for(
            &profile.class,
            history.len(),
            history.last().map(|s| s.observation.status.as_str()),
        );
        let template = parse_action(seg.text)
            .ok()
            .filter(|a| a.render() == seg.text)
            .and_then(|a| match_template(&model.action_templates, &a, &profile, &history));
        resolved.push(template.map(|t| SupervisedAction { context: key, template: t }));
        history.push(Step {
            action: Action::Malformed {
                raw: seg.text.to_string(),
            },
            observation: Observation {
                status: ObsStatus::Ok,
                payload: String::new(),
            },
        });
    }
    for r in resolved {
        match r {
            Some(item) => out.items.push(item),
            None => out.skipped_unknown += 1,
        }
    }
}

/// Resolves every masked action of the trajectory examples. General-chat
/// examples carry no action templates and contribute nothing.
pub fn supervision(model: &PolicyModel, examples: &[SftExample]) -> Supervision {
    let mut out = Supervision::default();
    for e in examples {
        if e.source == SftSource::Trajectory {
            example_supervision(model, e, &mut out);
        }
    }
    out
}

/// Masked negative log-likelihood: the sum over supervised actions of
/// `-log P(template | context)`.
pub fn nll(model: &PolicyModel, dataset: &MixedDataset) -> f64 {
    model.nll_of(&supervision(model, &dataset.examples))
}

impl PolicyModel {
    pub fn nll_of(&self, sup: &Supervision) -> f64 {
        sup.items
            .iter()
            .map(|s| -self.log_prob(&s.context, s.template))
            .sum()
    }
}
