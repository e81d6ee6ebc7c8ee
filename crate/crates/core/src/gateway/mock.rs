//! Deterministic offline provider.
//!
//! Lookup order: the fixture table (first matching entry wins), then the
//! seeded procedural generator for the request's schema. Fixture outputs are
//! indexed by attempt number, the last one repeating, so scripted
//! "bad then good" sequences need no mutable state.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{procedural, LlmRequest, Provider, ProviderCall, ProviderError, RawCompletion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Transport,
    Timeout,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureOutput {
    /// Raw reply text, passed through verbatim.
    Text(String),
    /// Reply serialised from a JSON value.
    Json(Value),
    Error(FailureKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub schema_id: String,
    /// Exact match on [`MockProvider::prompt_hash`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    /// Substring match on the user prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<FixtureOutput>,
}

impl FixtureEntry {
    fn matches(&self, request: &LlmRequest, hash: &str) -> bool {
        self.schema_id == request.response_schema_id
            && self.prompt_hash.as_deref().is_none_or(|h| h == hash)
            && self.contains.as_deref().is_none_or(|c| request.user_prompt.contains(c))
            && self.seed.is_none_or(|s| Some(s) == request.seed)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureTable {
    pub entries: Vec<FixtureEntry>,
}

impl FixtureTable {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn extend(&mut self, other: FixtureTable) {
        self.entries.extend(other.entries);
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    table: FixtureTable,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_table(table: FixtureTable) -> Self {
        Self { table }
    }

    /// Scripts `outputs` for exactly this request.
    pub fn script(mut self, request: &LlmRequest, outputs: Vec<FixtureOutput>) -> Self {
        self.table.entries.insert(
            0,
            FixtureEntry {
                schema_id: request.response_schema_id.clone(),
                prompt_hash: Some(Self::prompt_hash(request)),
                contains: None,
                seed: request.seed,
                outputs,
            },
        );
        self
    }

    /// Scripts `outputs` for any request on `schema_id` whose prompt contains `needle`.
    pub fn script_matching(mut self, schema_id: &str, needle: &str, outputs: Vec<FixtureOutput>) -> Self {
        self.table.entries.push(FixtureEntry {
            schema_id: schema_id.to_string(),
            prompt_hash: None,
            contains: Some(needle.to_string()),
            seed: None,
            outputs,
        });
        self
    }

    /// First 16 hex digits of SHA-256 over the system and user prompts.
    pub fn prompt_hash(request: &LlmRequest) -> String {
        let mut hasher = Sha256::new();
        hasher.update(request.system_prompt.as_bytes());
        hasher.update([0x1f]);
        hasher.update(request.user_prompt.as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }

    fn latency_for(model_id: &str, tokens: u64) -> u64 {
        let per_token = 8 + model_id.bytes().fold(0u64, |a, b| a.wrapping_mul(31).wrapping_add(b as u64)) % 8;
        40 + per_token * tokens
    }
}

pub(crate) fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl Provider for MockProvider {
    fn call(&self, call: ProviderCall<'_>) -> Result<RawCompletion, ProviderError> {
        let request = call.request;
        let hash = Self::prompt_hash(request);
        let text = match self.table.entries.iter().find(|e| e.matches(request, &hash)) {
            Some(entry) if !entry.outputs.is_empty() => {
                let idx = (call.attempt as usize).saturating_sub(1).min(entry.outputs.len() - 1);
                match &entry.outputs[idx] {
                    FixtureOutput::Text(t) => t.clone(),
                    FixtureOutput::Json(v) => v.to_string(),
                    FixtureOutput::Error(FailureKind::Transport) => {
                        return Err(ProviderError::Transport("scripted transport failure".into()))
                    }
                    FixtureOutput::Error(FailureKind::Timeout) => return Err(ProviderError::Timeout),
                    FixtureOutput::Error(FailureKind::Unavailable) => {
                        return Err(ProviderError::Unavailable("scripted outage".into()))
                    }
                }
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(procedural::seed_for(request));
                procedural::generate(request, &mut rng)
                    .map_err(ProviderError::Unavailable)?
                    .to_string()
            }
        };
        let tokens = whitespace_tokens(&text);
        Ok(RawCompletion {
            latency_ms: Self::latency_for(&request.model_id, tokens),
            completion_tokens: tokens,
            text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{prompt_with_context, Gateway, GatewayConfig, GatewayError};
    use serde_json::json;

    fn features_request(text: &str) -> LlmRequest {
        LlmRequest::chat(
            "mock-1",
            "feature_extraction",
            "Extract features.".into(),
            prompt_with_context("Extract.", &json!({ "text": text })),
        )
        .with_seed(Some(7))
    }

    #[test]
    fn same_seed_same_bytes() {
        let g = Gateway::mock();
        let r = features_request("bar chart about trends");
        let a = g.complete(&r).unwrap();
        let b = g.complete(&r).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.completion_token_count, whitespace_tokens(&a.text));
    }

    #[test]
    fn scripted_malformed_then_valid() {
        let r = features_request("anything");
        let mock = MockProvider::new().script(
            &r,
            vec![
                FixtureOutput::Text("{\"chart_type\": \"bars\"}".into()),
                FixtureOutput::Json(json!({"chart_type": "bar"})),
            ],
        );
        let g = Gateway::with_mock(mock, GatewayConfig { max_retries: 2, ..Default::default() });
        let resp = g.complete(&r).unwrap();
        assert_eq!(resp.attempt_count, 2);
        assert_eq!(resp.payload(), &json!({"chart_type": "bar"}));
    }

    #[test]
    fn fan_out_isolates_failures() {
        let reqs: Vec<_> = (0..10).map(|i| features_request(&format!("request nonce-{i}"))).collect();
        let mock = MockProvider::new().script(&reqs[3], vec![FixtureOutput::Error(FailureKind::Transport)]);
        let g = Gateway::with_mock(mock, GatewayConfig::default());
        let out = g.fan_out(&reqs, 4).unwrap();
        assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 9);
        assert!(matches!(out[3], Err(GatewayError::ProviderUnavailable(_))));
        for (i, r) in out.iter().enumerate() {
            if i != 3 {
                assert_eq!(r.as_ref().unwrap(), &g.complete(&reqs[i]).unwrap());
            }
        }
    }

    #[test]
    fn single_request_fan_out_equals_complete() {
        let g = Gateway::mock();
        let r = features_request("line chart");
        let out = g.fan_out(std::slice::from_ref(&r), 8).unwrap();
        assert_eq!(out[0].as_ref().unwrap(), &g.complete(&r).unwrap());
    }

    #[test]
    fn contains_rules_and_table_files() {
        let table: FixtureTable = serde_json::from_value(json!({
            "entries": [{ "schema_id": "feature_extraction", "contains": "needle", "outputs": [{"json": {"plausibility": 5}}] }]
        }))
        .unwrap();
        let g = Gateway::with_mock(MockProvider::with_table(table), GatewayConfig::default());
        assert_eq!(g.complete(&features_request("a needle here")).unwrap().payload(), &json!({"plausibility": 5}));
        assert_ne!(g.complete(&features_request("haystack")).unwrap().payload(), &json!({"plausibility": 5}));
    }
}
