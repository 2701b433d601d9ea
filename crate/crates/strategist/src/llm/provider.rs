//! Chat-completion providers.
//!
//! Any endpoint speaking the common `POST {base}/chat/completions` shape
//! works; the provider is picked by base URL + model name. Tests script
//! their own [`ChatProvider`] implementations.

use std::time::Duration;

use super::GatewayError;

/// One system+user exchange to send.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub system: &'a str,
    pub user: &'a str,
    pub temperature: f64,
}

/// Blocking chat completion. Implementations must be shareable across
/// worker threads.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError>;
}

/// HTTP provider for OpenAI-compatible chat-completion endpoints.
pub struct HttpChatProvider {
    http: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
}

impl HttpChatProvider {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        HttpChatProvider {
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("reqwest client"),
            base_url: base_url.into(),
            api_key,
        }
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let mut req = self.http.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let response = req
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Http {
                status: status.as_u16(),
                body_excerpt: text.chars().take(200).collect(),
            });
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Transport(format!("malformed provider response: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| {
                GatewayError::Transport("provider response has no message content".into())
            })
    }
}
