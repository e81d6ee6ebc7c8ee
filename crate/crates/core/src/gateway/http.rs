//! OpenAI-compatible chat-completions and embeddings adapter.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Provider, ProviderCall, ProviderError, RawCompletion, RequestKind};

#[derive(Debug, Clone)]
pub struct HttpProvider {
    base_url: String,
    api_key_env: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(base_url: &str, api_key_env: &str, timeout_s: f64) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key_env: api_key_env.to_string(),
            agent,
        }
    }

    fn api_key(&self) -> Result<String, ProviderError> {
        std::env::var(&self.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::Unavailable(format!("environment variable {} is not set", self.api_key_env)))
    }

    /// Request body for one attempt.
    pub fn body(call: &ProviderCall<'_>) -> (String, Value) {
        let request = call.request;
        if request.kind == RequestKind::Embed {
            return (
                "embeddings".into(),
                json!({ "model": request.model_id, "input": request.user_prompt }),
            );
        }
        let user_content = match &request.image {
            Some(image) => json!([
                { "type": "text", "text": request.user_prompt },
                { "type": "image_url", "image_url": { "url": format!("data:image/png;base64,{image}") } }
            ]),
            None => json!(request.user_prompt),
        };
        let mut messages = vec![
            json!({ "role": "system", "content": request.system_prompt }),
            json!({ "role": "user", "content": user_content }),
        ];
        if let (Some(previous), Some(correction)) = (call.previous_output, call.correction) {
            messages.push(json!({ "role": "assistant", "content": previous }));
            messages.push(json!({
                "role": "user",
                "content": format!("That reply was rejected: {correction}. Reply again with a single JSON object that satisfies the required schema.")
            }));
        }
        let mut body = json!({
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "response_format": { "type": "json_object" },
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        ("chat/completions".into(), body)
    }

    /// Maps a provider reply onto text and a token count.
    pub fn parse_reply(kind: RequestKind, reply: &Value) -> Result<(String, u64), ProviderError> {
        if kind == RequestKind::Embed {
            let vector = reply["data"][0]["embedding"]
                .as_array()
                .ok_or_else(|| ProviderError::Transport("embedding reply lacks data[0].embedding".into()))?;
            let tokens = reply["usage"]["total_tokens"].as_u64().unwrap_or(1);
            return Ok((json!({ "vector": vector }).to_string(), tokens));
        }
        let text = reply["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| ProviderError::Transport("reply lacks choices[0].message.content".into()))?;
        let tokens = reply["usage"]["completion_tokens"]
            .as_u64()
            .unwrap_or_else(|| super::mock::whitespace_tokens(text));
        Ok((text.to_string(), tokens))
    }
}

impl Provider for HttpProvider {
    fn call(&self, call: ProviderCall<'_>) -> Result<RawCompletion, ProviderError> {
        let key = self.api_key()?;
        let (path, body) = Self::body(&call);
        let started = Instant::now();
        let mut response = self
            .agent
            .post(&format!("{}/{}", self.base_url, path))
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::Timeout,
                other => ProviderError::Transport(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let reply: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transport(format!("HTTP {status}: {e}")))?;
        match status {
            200..=299 => {}
            401 | 403 | 404 => return Err(ProviderError::Unavailable(format!("HTTP {status}: {reply}"))),
            _ => return Err(ProviderError::Transport(format!("HTTP {status}: {reply}"))),
        }
        let (text, completion_tokens) = Self::parse_reply(call.request.kind, &reply)?;
        Ok(RawCompletion {
            text,
            completion_tokens,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
