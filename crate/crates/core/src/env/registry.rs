use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::handlers::HANDLER_IDS;
use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    String,
    Number,
    Boolean,
}

impl ParamType {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::String => "string",
            ParamType::Number => "number",
            ParamType::Boolean => "boolean",
        }
    }

    pub fn accepts(self, value: &serde_json::Value) -> bool {
        match self {
            ParamType::String => value.is_string(),
            ParamType::Number => value.is_number(),
            ParamType::Boolean => value.is_boolean(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    pub description: String,
}

/// One callable tool. `handler_id` names a built-in deterministic handler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub handler_id: String,
}

impl ApiSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Immutable, validated set of [`ApiSpec`]s in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    specs: Vec<ApiSpec>,
}

impl Registry {
    pub fn new(specs: Vec<ApiSpec>) -> Result<Self, String> {
        let mut seen = HashSet::new();
        for spec in &specs {
            if !seen.insert(spec.name.as_str()) {
                return Err(format!("duplicate api name \"{}\"", spec.name));
            }
            if !HANDLER_IDS.contains(&spec.handler_id.as_str()) {
                return Err(format!(
                    "api \"{}\" references unknown handler \"{}\"",
                    spec.name, spec.handler_id
                ));
            }
            let mut params = HashSet::new();
            for p in &spec.params {
                if !params.insert(p.name.as_str()) {
                    return Err(format!(
                        "api \"{}\" declares parameter \"{}\" twice",
                        spec.name, p.name
                    ));
                }
            }
        }
        Ok(Registry { specs })
    }

    pub fn from_json_str(path: &Path, text: &str) -> Result<Self, EnvError> {
        let specs: Vec<ApiSpec> =
            serde_json::from_str(text).map_err(|e| EnvError::from_json(path, e))?;
        Registry::new(specs).map_err(|message| EnvError::Validation {
            path: path.to_path_buf(),
            message,
        })
    }

    /// The six-tool bundle shipped with the crate.
    pub fn builtin() -> Self {
        Registry::from_json_str(Path::new("<builtin registry>"), crate::fixtures::REGISTRY_JSON)
            .expect("builtin registry is valid")
    }

    pub fn specs(&self) -> &[ApiSpec] {
        &self.specs
    }

    pub fn get(&self, name: &str) -> Option<&ApiSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// Load a registry file. An empty list is valid; samplers reject it later.
pub fn registry_load(bundle_path: &Path) -> Result<Registry, EnvError> {
    let text = std::fs::read_to_string(bundle_path).map_err(|source| EnvError::Io {
        path: bundle_path.to_path_buf(),
        source,
    })?;
    Registry::from_json_str(bundle_path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Registry, EnvError> {
        Registry::from_json_str(Path::new("test.json"), text)
    }

    #[test]
    fn builtin_bundle_has_the_six_desk_apis() {
        let reg = Registry::builtin();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(
            names,
            [
                "calculator",
                "weather_lookup",
                "unit_convert",
                "dictionary",
                "todo_add",
                "todo_list"
            ]
        );
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let text = r#"[
          {"name":"calculator","description":"a","params":[],"handler_id":"calculator"},
          {"name":"calculator","description":"b","params":[],"handler_id":"calculator"}
        ]"#;
        match load(text) {
            Err(EnvError::Validation { message, .. }) => assert!(message.contains("calculator")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_empty_registry() {
        assert!(load("[]").unwrap().is_empty());
    }

    #[test]
    fn malformed_file_reports_line() {
        let text = "[\n  {\"name\": \"x\",\n   oops }\n]";
        match load(text) {
            Err(EnvError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_handler_is_rejected() {
        let text = r#"[{"name":"x","description":"","params":[],"handler_id":"nope"}]"#;
        assert!(matches!(load(text), Err(EnvError::Validation { .. })));
    }
}
