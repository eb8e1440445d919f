//! Chat-completion client speaking the common `messages` JSON schema.

use std::env;
use std::time::Instant;

use serde_json::{json, Value};

use super::{check_messages, estimate_prompt_tokens, estimate_tokens, BackendConfig, BackendError, ChatBackend, ChatMessage, Completion};

pub struct HttpBackend {
    config: BackendConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable, if any.
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let api_key = config.api_key_env.as_deref().and_then(|name| env::var(name).ok());
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            config,
            api_key,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn request_body(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
            "max_tokens": self.config.max_tokens,
        })
    }
}

/// Pulls the assistant text and optional `(prompt, completion)` usage out of
/// a chat-completion response body.
pub(crate) fn parse_response(body: &Value) -> Result<(String, Option<(u64, u64)>), BackendError> {
    let text = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))?
        .to_owned();
    let usage = body.get("usage").and_then(|u| {
        Some((
            u.get("prompt_tokens")?.as_u64()?,
            u.get("completion_tokens")?.as_u64()?,
        ))
    });
    Ok((text, usage))
}

impl ChatBackend for HttpBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        check_messages(messages)?;
        let started = Instant::now();
        let mut request = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(self.request_body(messages))
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let raw = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: raw });
        }
        let body: Value = serde_json::from_str(&raw).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let (text, usage) = parse_response(&body)?;
        let (tokens_in, tokens_out) =
            usage.unwrap_or_else(|| (estimate_prompt_tokens(messages), estimate_tokens(&text)));
        Ok(Completion {
            text,
            tokens_in,
            tokens_out,
            latency: started.elapsed(),
        })
    }

    fn max_cost(&self, messages: &[ChatMessage]) -> u64 {
        estimate_prompt_tokens(messages) + u64::from(self.config.max_tokens)
    }
}
