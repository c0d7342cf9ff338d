use serde::{Deserialize, Serialize};

use super::Instruction;

fn default_tolerance() -> f64 {
    1e-6
}

/// Ground-truth answer checker attached to an instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checker {
    /// Normalized string equality.
    Exact { truth: String },
    /// Relative tolerance; absolute when the truth is zero.
    Numeric {
        truth: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Every listed substring must occur in the normalized answer.
    SubstringSet { truth: Vec<String> },
}

impl Checker {
    pub fn accepts(&self, answer: &str) -> bool {
        let answer = normalize_answer(answer);
        match self {
            Checker::Exact { truth } => answer == normalize_answer(truth),
            Checker::Numeric { truth, tolerance } => match answer.parse::<f64>() {
                Ok(value) if value.is_finite() => {
                    let scale = if *truth == 0.0 { 1.0 } else { truth.abs() };
                    (value - truth).abs() <= tolerance * scale
                }
                _ => false,
            },
            Checker::SubstringSet { truth } => truth
                .iter()
                .all(|needle| answer.contains(&normalize_answer(needle))),
        }
    }
}

/// Lowercase, trim, drop one terminal punctuation mark, trim again.
pub fn normalize_answer(answer: &str) -> String {
    let lowered = answer.trim().to_lowercase();
    let stripped = match lowered.chars().last() {
        Some('.' | ',' | '!' | '?' | ';' | ':') => &lowered[..lowered.len() - 1],
        _ => lowered.as_str(),
    };
    stripped.trim().to_string()
}

/// Total: every answer string is either accepted or rejected.
pub fn check_answer(instruction: &Instruction, answer: &str) -> bool {
    instruction.checker.accepts(answer)
}
