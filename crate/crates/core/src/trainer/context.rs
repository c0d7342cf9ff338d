use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use crate::env::{Instruction, Step};

/// Instruction shape recovered from its text: a template class plus the
/// argument slots the text carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionProfile {
    pub class: String,
    pub slots: BTreeMap<String, String>,
}

static PATTERNS: LazyLock<Vec<(&'static str, Regex)>> = LazyLock::new(|| {
    [
        ("arith", r"^Compute (?P<expr>.+)\.$"),
        (
            "weather",
            r"^What is the weather in (?P<city>[A-Za-z ]+) on (?P<day>[A-Za-z]+)\?$",
        ),
        (
            "convert",
            r"^Convert (?P<value>-?[0-9.]+) (?P<from>[A-Za-z]+) to (?P<to>[A-Za-z]+)\.$",
        ),
        ("define", r"^What does the word (?P<word>[A-Za-z-]+) mean\?$"),
        (
            "todo",
            r"^Add (?P<item>.+) to my todo list and show me the list\.$",
        ),
    ]
    .into_iter()
    .map(|(class, re)| (class, Regex::new(re).expect("static pattern")))
    .collect()
});

/// Unrecognized text maps to class `other` with no slots.
pub fn classify(text: &str) -> InstructionProfile {
    let text = text.trim();
    for (class, re) in PATTERNS.iter() {
        if let Some(caps) = re.captures(text) {
            let slots = re
                .capture_names()
                .flatten()
                .filter_map(|name| caps.name(name).map(|m| (name.to_string(), m.as_str().to_string())))
                .collect();
            return InstructionProfile {
                class: class.to_string(),
                slots,
            };
        }
    }
    InstructionProfile {
        class: "other".into(),
        slots: BTreeMap::new(),
    }
}

/// `class|step|last-status`, where the status of an empty history is `start`.
/// Observation payloads never enter the key.
pub fn context_key(instruction: &Instruction, history: &[Step]) -> String {
    key_for(&classify(&instruction.text).class, history.len(), history.last().map(|s| s.observation.status.as_str()))
}

pub(crate) fn key_for(class: &str, step: usize, last_status: Option<&str>) -> String {
    format!("{class}|{step}|{}", last_status.unwrap_or("start"))
}
