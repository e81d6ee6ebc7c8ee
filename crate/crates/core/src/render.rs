//! Client side of the chart renderer. The studio runs without one: under
//! [`NoRenderer`] questions carry no image and the vision step is skipped.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Default for Viewport {
    fn default() -> Self {
        Self { width: 800, height: 600 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub chart_script: String,
    pub csv: String,
    pub viewport: Viewport,
    pub timeout_ms: u64,
}

impl RenderRequest {
    pub fn new(chart_script: &str, csv: &str) -> Self {
        Self {
            chart_script: chart_script.to_string(),
            csv: csv.to_string(),
            viewport: Viewport::default(),
            timeout_ms: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOutput {
    pub svg: String,
    pub png_base64: String,
}

impl RenderOutput {
    /// Content address of the vector output.
    pub fn image_ref(&self) -> String {
        format!("sha256:{}", hex::encode(Sha256::digest(self.svg.as_bytes())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail")]
pub enum RenderError {
    #[error("chart script failed: {0}")]
    ScriptError(String),
    #[error("render timed out")]
    Timeout,
    #[error("script produced no drawable output")]
    EmptyOutput,
    #[error("renderer unreachable: {0}")]
    Transport(String),
}

pub trait Renderer: Send + Sync + std::fmt::Debug {
    /// `Ok(None)` means rendering is disabled.
    fn render(&self, request: &RenderRequest) -> Result<Option<RenderOutput>, RenderError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoRenderer;

impl Renderer for NoRenderer {
    fn render(&self, _: &RenderRequest) -> Result<Option<RenderOutput>, RenderError> {
        Ok(None)
    }
}

/// Talks to a renderer service exposing `POST /render`.
#[derive(Debug, Clone)]
pub struct HttpRenderer {
    base_url: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ErrorBody {
    code: String,
    #[serde(default)]
    message: String,
}

impl HttpRenderer {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { base_url: base_url.trim_end_matches('/').to_string(), agent }
    }
}

impl Renderer for HttpRenderer {
    fn render(&self, request: &RenderRequest) -> Result<Option<RenderOutput>, RenderError> {
        let mut response = self
            .agent
            .post(&format!("{}/render", self.base_url))
            .send_json(request)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => RenderError::Timeout,
                other => RenderError::Transport(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| RenderError::Transport(e.to_string()))?;
        if (200..300).contains(&status) {
            let out: RenderOutput = serde_json::from_str(&body).map_err(|e| RenderError::Transport(e.to_string()))?;
            if out.svg.trim().is_empty() {
                return Err(RenderError::EmptyOutput);
            }
            return Ok(Some(out));
        }
        let err: ErrorBody = serde_json::from_str(&body)
            .map_err(|_| RenderError::Transport(format!("HTTP {status}: {body}")))?;
        Err(match err.code.as_str() {
            "ScriptError" => RenderError::ScriptError(err.message),
            "Timeout" => RenderError::Timeout,
            "EmptyOutput" => RenderError::EmptyOutput,
            other => RenderError::Transport(format!("{other}: {}", err.message)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults() {
        let r = RenderRequest::new("s", "c");
        assert_eq!(r.viewport, Viewport { width: 800, height: 600 });
        assert_eq!(r.timeout_ms, 5000);
        assert_eq!(NoRenderer.render(&r), Ok(None));
    }

    #[test]
    fn unreachable_renderer_is_transport_error() {
        let r = HttpRenderer::new("http://127.0.0.1:9");
        assert!(matches!(r.render(&RenderRequest::new("s", "c")), Err(RenderError::Transport(_))));
    }

    #[test]
    fn image_ref_is_content_address() {
        let a = RenderOutput { svg: "<svg/>".into(), png_base64: String::new() };
        assert!(a.image_ref().starts_with("sha256:"));
        assert_eq!(a.image_ref(), a.clone().image_ref());
    }
}
