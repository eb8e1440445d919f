//! Chat-completion transport and token accounting.

use std::fmt;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod http;
mod replay;

pub use http::HttpBackend;
pub use replay::{RecordingBackend, ReplayBackend, ReplayEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency: Duration,
}

impl Completion {
    pub fn tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub retries: u32,
    /// Initial backoff; doubles after every failed attempt.
    pub backoff_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".to_owned(),
            model: "gpt-3.5-turbo-0613".to_owned(),
            temperature: 0.4,
            top_p: 1.0,
            max_tokens: 600,
            api_key_env: Some("OPENAI_API_KEY".to_owned()),
            timeout_secs: 60.0,
            retries: 3,
            backoff_ms: 1000,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::InvalidConfig(m.to_owned()));
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must be in (0, 1]");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be > 0");
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return bad("timeout_secs must be > 0");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("replay script exhausted after {0} calls")]
    ScriptExhausted(usize),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("giving up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<BackendError> },
}

impl BackendError {
    /// Transport failures, rate limiting and server errors are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub fn estimate_prompt_tokens(messages: &[ChatMessage]) -> u64 {
    messages.iter().map(|m| estimate_tokens(&m.content)).sum()
}

pub(crate) fn check_messages(messages: &[ChatMessage]) -> Result<(), BackendError> {
    match messages.first() {
        None => Err(BackendError::InvalidRequest("no messages".into())),
        Some(m) if m.role != Role::System => {
            Err(BackendError::InvalidRequest("first message must be the system message".into()))
        }
        Some(_) => Ok(()),
    }
}

pub trait ChatBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError>;

    /// Upper bound on the tokens the next `complete` call with `messages`
    /// can consume.
    fn max_cost(&self, messages: &[ChatMessage]) -> u64;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        (**self).complete(messages)
    }

    fn max_cost(&self, messages: &[ChatMessage]) -> u64 {
        (**self).max_cost(messages)
    }
}

/// Retries transient failures with exponential backoff.
pub struct Retrying<B> {
    inner: B,
    retries: u32,
    backoff: Duration,
}

impl<B: ChatBackend> Retrying<B> {
    pub fn new(inner: B, retries: u32, backoff: Duration) -> Self {
        Self { inner, retries, backoff }
    }

    pub fn from_config(inner: B, config: &BackendConfig) -> Self {
        Self::new(inner, config.retries, Duration::from_millis(config.backoff_ms))
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: ChatBackend> ChatBackend for Retrying<B> {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.inner.complete(messages) {
                Ok(c) => return Ok(c),
                Err(e) if e.is_transient() && attempt <= self.retries => {
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                    delay = delay.saturating_mul(2);
                }
                Err(e) if e.is_transient() => {
                    return Err(BackendError::RetriesExhausted { attempts: attempt, last: Box::new(e) })
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn max_cost(&self, messages: &[ChatMessage]) -> u64 {
        self.inner.max_cost(messages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcdefghij"), 3);
    }

    #[test]
    fn default_sampling_parameters() {
        let c = BackendConfig::default();
        assert_eq!(c.temperature, 0.4);
        assert_eq!(c.top_p, 1.0);
        assert_eq!(c.max_tokens, 600);
        c.validate().unwrap();
    }

    #[test]
    fn config_rejects_negative_temperature_and_zero_max_tokens() {
        let c = BackendConfig { temperature: -0.1, ..Default::default() };
        assert!(c.validate().is_err());
        let c = BackendConfig { max_tokens: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn retry_wrapper_gives_up_after_retry_count() {
        let script = vec![
            ReplayEntry::error("boom"),
            ReplayEntry::error("boom"),
            ReplayEntry::error("boom"),
            ReplayEntry::text("late"),
        ];
        let mut b = Retrying::new(ReplayBackend::new(script), 2, Duration::ZERO);
        let msgs = [ChatMessage::system("s")];
        let err = b.complete(&msgs).unwrap_err();
        assert!(matches!(err, BackendError::RetriesExhausted { attempts: 3, .. }), "{err}");
    }

    #[test]
    fn retry_wrapper_recovers() {
        let script = vec![ReplayEntry::error("boom"), ReplayEntry::text("ok")];
        let mut b = Retrying::new(ReplayBackend::new(script), 2, Duration::ZERO);
        let c = b.complete(&[ChatMessage::system("s")]).unwrap();
        assert_eq!(c.text, "ok");
    }

    #[test]
    fn script_exhaustion_is_not_retried() {
        let mut b = Retrying::new(ReplayBackend::new(vec![]), 5, Duration::ZERO);
        assert_eq!(b.complete(&[ChatMessage::system("s")]), Err(BackendError::ScriptExhausted(0)));
    }
}
