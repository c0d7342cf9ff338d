use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Checker, EnvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

/// A task the actor responds to, with its ground-truth checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruction {
    pub id: String,
    pub text: String,
    pub relevant_apis: Vec<String>,
    pub checker: Checker,
    pub split: Split,
}

pub fn parse_instructions(path: &Path, text: &str) -> Result<Vec<Instruction>, EnvError> {
    let list: Vec<Instruction> =
        serde_json::from_str(text).map_err(|e| EnvError::from_json(path, e))?;
    let mut seen = HashSet::new();
    for ins in &list {
        if !seen.insert(ins.id.as_str()) {
            return Err(EnvError::Validation {
                path: path.to_path_buf(),
                message: format!("duplicate instruction id \"{}\"", ins.id),
            });
        }
    }
    Ok(list)
}

pub fn load_instructions(path: &Path) -> Result<Vec<Instruction>, EnvError> {
    let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instructions(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_split_is_twenty_ten() {
        let list = crate::fixtures::instructions();
        let train = list.iter().filter(|i| i.split == Split::Train).count();
        let eval = list.iter().filter(|i| i.split == Split::Eval).count();
        assert_eq!((train, eval), (20, 10));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let one = r#"{"id":"a","text":"t","relevant_apis":[],"checker":{"kind":"exact","truth":"x"},"split":"train"}"#;
        let text = format!("[{one},{one}]");
        assert!(matches!(
            parse_instructions(Path::new("i.json"), &text),
            Err(EnvError::Validation { .. })
        ));
    }
}
