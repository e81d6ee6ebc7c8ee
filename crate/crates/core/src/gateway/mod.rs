//! Provider-agnostic LLM client.
//!
//! Every structured call names a response schema. Output is parsed as a single
//! JSON object and validated against that schema (plus an optional caller
//! check); on failure the gateway re-prompts with the validation error
//! appended, up to `max_retries` extra attempts.

mod http;
pub mod mock;
mod procedural;
pub mod schema;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use http::HttpProvider;
pub use mock::{FixtureEntry, FixtureOutput, FixtureTable, MockProvider};
pub use schema::{SchemaError, SchemaRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Chat,
    VisionChat,
    Embed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub kind: RequestKind,
    pub model_id: String,
    pub system_prompt: String,
    pub user_prompt: String,
    /// Base64 image payload; required for and only for `vision_chat`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub response_schema_id: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Local annotations. Never sent to remote providers; the mock adapter
    /// reads them to emulate plausible behaviour.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

impl LlmRequest {
    pub fn chat(model_id: &str, schema_id: &str, system: String, user: String) -> Self {
        Self {
            kind: RequestKind::Chat,
            model_id: model_id.to_string(),
            system_prompt: system,
            user_prompt: user,
            image: None,
            response_schema_id: schema_id.to_string(),
            temperature: 0.7,
            seed: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn embed(model_id: &str, text: &str) -> Self {
        Self {
            kind: RequestKind::Embed,
            model_id: model_id.to_string(),
            system_prompt: String::new(),
            user_prompt: text.to_string(),
            image: None,
            response_schema_id: schema::EMBEDDING_SCHEMA.to_string(),
            temperature: 0.0,
            seed: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Attaches an image, switching the request to `vision_chat`.
    pub fn with_image(mut self, image: Option<String>) -> Self {
        if image.is_some() {
            self.kind = RequestKind::VisionChat;
        }
        self.image = image;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_metadata(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    fn check(&self, schemas: &SchemaRegistry) -> Result<(), GatewayError> {
        match (self.kind, self.image.is_some()) {
            (RequestKind::VisionChat, false) => {
                return Err(GatewayError::InvalidRequest(
                    "vision_chat request without an image".into(),
                ))
            }
            (RequestKind::Chat | RequestKind::Embed, true) => {
                return Err(GatewayError::InvalidRequest(
                    "image supplied on a non-vision request".into(),
                ))
            }
            _ => {}
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if !schemas.contains(&self.response_schema_id) {
            return Err(GatewayError::InvalidRequest(format!(
                "unregistered response schema `{}`",
                self.response_schema_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<Value>,
    pub completion_token_count: u64,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

impl LlmResponse {
    /// The validated payload. Always present on a response returned by the gateway.
    pub fn payload(&self) -> &Value {
        self.parsed.as_ref().unwrap_or(&Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail")]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("schema `{schema_id}` violated on all {attempts} attempts: {last_error}")]
    SchemaViolationExhausted {
        schema_id: String,
        attempts: u32,
        last_error: String,
    },
    #[error("provider timed out")]
    Timeout,
}

/// Raw output of one provider round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCompletion {
    pub text: String,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Not worth retrying (missing credentials, unsupported request).
    #[error("unavailable: {0}")]
    Unavailable(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("timeout")]
    Timeout,
}

/// One attempt as seen by a provider. `correction` is set on re-prompts and
/// carries the validation error for the previous output.
#[derive(Debug, Clone, Copy)]
pub struct ProviderCall<'a> {
    pub request: &'a LlmRequest,
    pub attempt: u32,
    pub previous_output: Option<&'a str>,
    pub correction: Option<&'a str>,
}

pub trait Provider: Send + Sync {
    fn call(&self, call: ProviderCall<'_>) -> Result<RawCompletion, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    HttpApi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub provider: ProviderKind,
    /// Name of the environment variable holding the API key.
    pub api_key_source: String,
    pub base_url: String,
    pub max_parallel: usize,
    pub max_retries: u32,
    pub timeout_s: f64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Mock,
            api_key_source: "OPENAI_API_KEY".into(),
            base_url: "https://api.openai.com/v1".into(),
            max_parallel: 8,
            max_retries: 2,
            timeout_s: 180.0,
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_parallel == 0 {
            return Err(GatewayError::InvalidRequest("max_parallel must be >= 1".into()));
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err(GatewayError::InvalidRequest("timeout_s must be > 0".into()));
        }
        Ok(())
    }
}

/// Caller-supplied check run after schema validation; `Err` triggers a re-prompt.
pub type PayloadCheck<'a> = dyn Fn(&Value) -> Result<(), String> + Sync + 'a;

#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn Provider>,
    schemas: Arc<SchemaRegistry>,
    config: GatewayConfig,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("config", &self.config).finish()
    }
}

impl Gateway {
    pub fn new(
        provider: Arc<dyn Provider>,
        schemas: Arc<SchemaRegistry>,
        config: GatewayConfig,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Self {
            provider,
            schemas,
            config,
        })
    }

    /// Mock provider, built-in schemas, default config.
    pub fn mock() -> Self {
        Self::with_mock(MockProvider::new(), GatewayConfig::default())
    }

    pub fn with_mock(mock: MockProvider, config: GatewayConfig) -> Self {
        Self::new(Arc::new(mock), Arc::new(SchemaRegistry::builtin()), config)
            .expect("valid gateway config")
    }

    /// Builds the provider named by `config.provider`.
    pub fn from_config(
        config: GatewayConfig,
        schemas: Arc<SchemaRegistry>,
        fixtures: Option<FixtureTable>,
    ) -> Result<Self, GatewayError> {
        let provider: Arc<dyn Provider> = match config.provider {
            ProviderKind::Mock => Arc::new(MockProvider::with_table(fixtures.unwrap_or_default())),
            ProviderKind::HttpApi => Arc::new(HttpProvider::new(
                &config.base_url,
                &config.api_key_source,
                config.timeout_s,
            )),
        };
        Self::new(provider, schemas, config)
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn schemas(&self) -> &SchemaRegistry {
        &self.schemas
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        self.complete_checked(request, &|_| Ok(()))
    }

    pub fn complete_checked(
        &self,
        request: &LlmRequest,
        check: &PayloadCheck<'_>,
    ) -> Result<LlmResponse, GatewayError> {
        request.check(&self.schemas)?;
        let max_attempts = self.config.max_retries + 1;
        let mut latency_ms = 0;
        let mut previous: Option<String> = None;
        let mut correction: Option<String> = None;
        let mut last_failure = GatewayError::ProviderUnavailable("no attempt made".into());

        for attempt in 1..=max_attempts {
            let call = ProviderCall {
                request,
                attempt,
                previous_output: previous.as_deref(),
                correction: correction.as_deref(),
            };
            let raw = match self.provider.call(call) {
                Ok(raw) => raw,
                Err(ProviderError::Unavailable(msg)) => {
                    return Err(GatewayError::ProviderUnavailable(msg))
                }
                Err(ProviderError::Transport(msg)) => {
                    last_failure = GatewayError::ProviderUnavailable(msg);
                    continue;
                }
                Err(ProviderError::Timeout) => {
                    last_failure = GatewayError::Timeout;
                    continue;
                }
            };
            latency_ms += raw.latency_ms;
            match self.validate_output(request, &raw.text, check) {
                Ok(parsed) => {
                    return Ok(LlmResponse {
                        text: raw.text,
                        parsed: Some(parsed),
                        completion_token_count: raw.completion_tokens.max(1),
                        latency_ms,
                        attempt_count: attempt,
                    })
                }
                Err(err) => {
                    last_failure = GatewayError::SchemaViolationExhausted {
                        schema_id: request.response_schema_id.clone(),
                        attempts: attempt,
                        last_error: err.clone(),
                    };
                    previous = Some(raw.text);
                    correction = Some(err);
                }
            }
        }
        Err(last_failure)
    }

    fn validate_output(
        &self,
        request: &LlmRequest,
        text: &str,
        check: &PayloadCheck<'_>,
    ) -> Result<Value, String> {
        let value = extract_json_object(text)?;
        self.schemas.validate(&request.response_schema_id, &value)?;
        check(&value)?;
        Ok(value)
    }

    /// Runs `requests` with at most `limit` in flight. Slot `i` of the result
    /// holds the outcome of `requests[i]`.
    pub fn fan_out(
        &self,
        requests: &[LlmRequest],
        limit: usize,
    ) -> Result<Vec<Result<LlmResponse, GatewayError>>, GatewayError> {
        self.fan_out_checked(requests, limit, &|_, _| Ok(()))
    }

    pub fn fan_out_checked(
        &self,
        requests: &[LlmRequest],
        limit: usize,
        check: &(dyn Fn(usize, &Value) -> Result<(), String> + Sync),
    ) -> Result<Vec<Result<LlmResponse, GatewayError>>, GatewayError> {
        if limit == 0 {
            return Err(GatewayError::InvalidRequest("fan_out limit must be >= 1".into()));
        }
        let slots: Vec<OnceLock<Result<LlmResponse, GatewayError>>> =
            requests.iter().map(|_| OnceLock::new()).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..limit.min(requests.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(request) = requests.get(i) else { break };
                    let outcome = self.complete_checked(request, &|v| check(i, v));
                    let _ = slots[i].set(outcome);
                });
            }
        });
        Ok(slots
            .into_iter()
            .map(|slot| slot.into_inner().expect("every slot is filled"))
            .collect())
    }

    /// Embeds `text`, returning the vector.
    pub fn embed(&self, model_id: &str, text: &str, seed: Option<u64>) -> Result<Vec<f64>, GatewayError> {
        let response = self.complete(&LlmRequest::embed(model_id, text).with_seed(seed))?;
        Ok(response.payload()["vector"]
            .as_array()
            .map(|xs| xs.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default())
    }
}

/// Finds the single JSON object in a model reply, tolerating code fences and
/// surrounding prose.
pub fn extract_json_object(text: &str) -> Result<Value, String> {
    let trimmed = text.trim();
    if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(trimmed) {
        return Ok(v);
    }
    let start = trimmed.find('{').ok_or("reply contains no JSON object")?;
    let end = trimmed.rfind('}').ok_or("reply contains no JSON object")?;
    if end < start {
        return Err("reply contains no JSON object".into());
    }
    match serde_json::from_str::<Value>(&trimmed[start..=end]) {
        Ok(v @ Value::Object(_)) => Ok(v),
        Ok(_) => Err("reply is not a JSON object".into()),
        Err(e) => Err(format!("reply is not valid JSON: {e}")),
    }
}

/// Renders a prompt body with a machine-readable context block.
pub fn prompt_with_context(instructions: &str, context: &Value) -> String {
    format!("{instructions}\n\nContext:\n```json\n{context}\n```\n\nReply with a single JSON object.")
}

/// Extracts the last fenced JSON context block from a prompt.
pub fn context_block(prompt: &str) -> Option<Value> {
    let start = prompt.rfind("```json\n")? + "```json\n".len();
    let end = start + prompt[start..].find("\n```")?;
    serde_json::from_str(&prompt[start..end]).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::sync::atomic::AtomicU32;
    use std::time::Duration;

    fn req(user: &str) -> LlmRequest {
        LlmRequest::chat("mock-1", "embedding", String::new(), user.to_string())
    }

    struct Scripted(Vec<Result<&'static str, ProviderError>>);

    impl Provider for Scripted {
        fn call(&self, call: ProviderCall<'_>) -> Result<RawCompletion, ProviderError> {
            let idx = (call.attempt as usize - 1).min(self.0.len() - 1);
            self.0[idx].clone().map(|t| RawCompletion {
                text: t.to_string(),
                completion_tokens: 3,
                latency_ms: 10,
            })
        }
    }

    fn gateway(p: impl Provider + 'static, retries: u32) -> Gateway {
        Gateway::new(
            Arc::new(p),
            Arc::new(SchemaRegistry::builtin()),
            GatewayConfig {
                max_retries: retries,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn vision_without_image_rejected() {
        let mut r = req("x");
        r.kind = RequestKind::VisionChat;
        let err = Gateway::mock().complete(&r).unwrap_err();
        assert!(matches!(err, GatewayError::InvalidRequest(_)));
    }

    #[test]
    fn unknown_schema_rejected() {
        let mut r = req("x");
        r.response_schema_id = "nope".into();
        assert!(matches!(
            Gateway::mock().complete(&r),
            Err(GatewayError::InvalidRequest(_))
        ));
    }

    #[test]
    fn retries_after_malformed_output() {
        let g = gateway(Scripted(vec![Ok("not json"), Ok(r#"{"vector": [1.0]}"#)]), 2);
        let resp = g.complete(&req("x")).unwrap();
        assert_eq!(resp.attempt_count, 2);
        assert_eq!(resp.latency_ms, 20);
        assert_eq!(resp.parsed, Some(json!({"vector": [1.0]})));
    }

    #[test]
    fn exhausted_schema_violation() {
        let g = gateway(Scripted(vec![Ok(r#"{"vector": "bad"}"#)]), 1);
        match g.complete(&req("x")).unwrap_err() {
            GatewayError::SchemaViolationExhausted { attempts, .. } => assert_eq!(attempts, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transport_errors_retry_then_surface() {
        let g = gateway(
            Scripted(vec![Err(ProviderError::Transport("reset".into())), Ok(r#"{"vector":[0.5]}"#)]),
            1,
        );
        assert_eq!(g.complete(&req("x")).unwrap().attempt_count, 2);
        let g = gateway(Scripted(vec![Err(ProviderError::Timeout)]), 2);
        assert_eq!(g.complete(&req("x")).unwrap_err(), GatewayError::Timeout);
        let g = gateway(Scripted(vec![Err(ProviderError::Unavailable("no key".into()))]), 5);
        assert!(matches!(
            g.complete(&req("x")).unwrap_err(),
            GatewayError::ProviderUnavailable(_)
        ));
    }

    #[test]
    fn caller_check_triggers_reprompt() {
        let g = gateway(Scripted(vec![Ok(r#"{"vector":[]}"#), Ok(r#"{"vector":[2.0]}"#)]), 2);
        let resp = g
            .complete_checked(&req("x"), &|v| {
                if v["vector"].as_array().map_or(0, Vec::len) == 0 {
                    Err("empty".into())
                } else {
                    Ok(())
                }
            })
            .unwrap();
        assert_eq!(resp.attempt_count, 2);
    }

    struct Concurrency {
        current: AtomicU32,
        peak: AtomicU32,
    }

    impl Provider for Concurrency {
        fn call(&self, call: ProviderCall<'_>) -> Result<RawCompletion, ProviderError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(15));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(RawCompletion {
                text: format!(r#"{{"vector": [{}]}}"#, call.request.user_prompt),
                completion_tokens: 1,
                latency_ms: 1,
            })
        }
    }

    #[test]
    fn fan_out_bounds_in_flight_and_keeps_order() {
        let provider = Arc::new(Concurrency {
            current: AtomicU32::new(0),
            peak: AtomicU32::new(0),
        });
        let g = Gateway::new(
            provider.clone(),
            Arc::new(SchemaRegistry::builtin()),
            GatewayConfig::default(),
        )
        .unwrap();
        let reqs: Vec<_> = (0..20).map(|i| req(&i.to_string())).collect();
        let out = g.fan_out(&reqs, 4).unwrap();
        assert_eq!(out.len(), 20);
        for (i, r) in out.iter().enumerate() {
            assert_eq!(r.as_ref().unwrap().payload()["vector"][0].as_f64(), Some(i as f64));
        }
        assert!(provider.peak.load(Ordering::SeqCst) <= 4);
        assert!(g.fan_out(&reqs, 0).is_err());
        assert!(g.fan_out(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn json_extraction_tolerates_fences() {
        assert_eq!(
            extract_json_object("```json\n{\"a\": 1}\n```").unwrap(),
            json!({"a": 1})
        );
        assert_eq!(extract_json_object("Sure! {\"a\": 2} hope it helps").unwrap(), json!({"a": 2}));
        assert!(extract_json_object("[1,2]").is_err());
        assert!(extract_json_object("{oops").is_err());
    }

    #[test]
    fn context_block_round_trip() {
        let ctx = json!({"k": [1, 2, "x"]});
        let prompt = prompt_with_context("Do the thing.", &ctx);
        assert_eq!(context_block(&prompt), Some(ctx));
        assert_eq!(context_block("no block"), None);
    }
}
