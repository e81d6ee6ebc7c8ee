//! Registry of JSON schemas, keyed by file stem.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde_json::Value;
use thiserror::Error;

pub const EMBEDDING_SCHEMA: &str = "embedding";

macro_rules! builtin_schemas {
    ($($name:literal),+ $(,)?) => {
        &[$(($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/", $name, ".json")))),+]
    };
}

/// Schemas shipped in the repository's `schemas/` directory.
pub const BUILTIN: &[(&str, &str)] = builtin_schemas!(
    "answer_distribution",
    "benchmark_report",
    "chart_customization",
    "cohort_spec",
    "embedding",
    "feature_extraction",
    "instructor_input",
    "problem",
    "profile_batch",
    "project",
    "qa_generation",
    "question_revision",
    "question_version",
    "reliability_stats",
    "sankey_model",
    "simulation_run",
    "student_response",
    "template_manifest",
    "top_strategies",
    "trace_canonicalization",
    "version_stats",
);

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("reading schema directory: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema `{id}` is not valid JSON: {reason}")]
    Parse { id: String, reason: String },
    #[error("schema `{id}` does not compile: {reason}")]
    Compile { id: String, reason: String },
}

struct Entry {
    source: Value,
    /// Builtin schemas compile on first use; registered ones compile eagerly.
    validator: OnceLock<jsonschema::Validator>,
}

impl Entry {
    fn validator(&self) -> &jsonschema::Validator {
        self.validator
            .get_or_init(|| jsonschema::validator_for(&self.source).expect("builtin schema compiles"))
    }
}

#[derive(Default)]
pub struct SchemaRegistry {
    entries: BTreeMap<String, Entry>,
}

impl std::fmt::Debug for SchemaRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl SchemaRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self::default();
        for (id, text) in BUILTIN {
            let source: Value = serde_json::from_str(text).expect("builtin schema is valid JSON");
            reg.entries.insert(id.to_string(), Entry { source, validator: OnceLock::new() });
        }
        reg
    }

    /// Loads every `*.json` file in `dir`; the file stem becomes the schema id.
    pub fn load_dir(dir: &Path) -> Result<Self, SchemaError> {
        let mut reg = Self::default();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&path)?;
            let value = serde_json::from_str(&text).map_err(|e| SchemaError::Parse {
                id: id.clone(),
                reason: e.to_string(),
            })?;
            reg.register(&id, value)?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, id: &str, schema: Value) -> Result<(), SchemaError> {
        let validator = jsonschema::validator_for(&schema).map_err(|e| SchemaError::Compile {
            id: id.to_string(),
            reason: e.to_string(),
        })?;
        self.entries.insert(
            id.to_string(),
            Entry {
                source: schema,
                validator: OnceLock::from(validator),
            },
        );
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&Value> {
        self.entries.get(id).map(|e| &e.source)
    }

    /// Validates `instance`, reporting every violation in one message.
    pub fn validate(&self, id: &str, instance: &Value) -> Result<(), String> {
        let entry = self
            .entries
            .get(id)
            .ok_or_else(|| format!("unregistered schema `{id}`"))?;
        let errors: Vec<String> = entry
            .validator()
            .iter_errors(instance)
            .map(|e| {
                let path = e.instance_path.to_string();
                if path.is_empty() {
                    e.to_string()
                } else {
                    format!("{path}: {e}")
                }
            })
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors.join("; "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builtin_registry_matches_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
        let loaded = SchemaRegistry::load_dir(&dir).unwrap();
        let builtin = SchemaRegistry::builtin();
        assert_eq!(
            loaded.ids().collect::<Vec<_>>(),
            builtin.ids().collect::<Vec<_>>()
        );
    }

    #[test]
    fn every_builtin_schema_compiles() {
        for (id, text) in BUILTIN {
            let mut reg = SchemaRegistry::default();
            reg.register(id, serde_json::from_str(text).unwrap()).unwrap();
        }
    }

    #[test]
    fn student_response_requires_all_ratings() {
        let reg = SchemaRegistry::builtin();
        let mut ok = json!({
            "selected_label": "A",
            "reasoning_steps": ["I read the question"],
            "ratings": {
                "context_clarity": 3, "chart_complexity": 2, "data_difficulty": 4,
                "visual_encoding_complexity": 3, "overall_cognitive_challenge": 3, "hint_dependency": 1
            }
        });
        reg.validate("student_response", &ok).unwrap();
        ok["ratings"].as_object_mut().unwrap().remove("hint_dependency");
        assert!(reg.validate("student_response", &ok).is_err());
        ok["ratings"]["hint_dependency"] = json!(6);
        assert!(reg.validate("student_response", &ok).is_err());
    }
}
