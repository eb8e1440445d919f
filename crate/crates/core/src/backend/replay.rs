//! Scripted backend for deterministic runs, and a recorder producing the
//! same script format from live sessions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_messages, estimate_prompt_tokens, estimate_tokens, BackendError, ChatBackend, ChatMessage, Completion};

/// One scripted call. A bare string is the common case; token counts
/// default to the character estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplayEntry {
    Text(String),
    Full {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tokens_in: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tokens_out: Option<u64>,
    },
    /// Simulated transport failure.
    Error { error: String },
}

impl ReplayEntry {
    pub fn text(text: impl Into<String>) -> Self {
        ReplayEntry::Text(text.into())
    }

    pub fn error(message: impl Into<String>) -> Self {
        ReplayEntry::Error { error: message.into() }
    }

    fn cost(&self, messages: &[ChatMessage]) -> (u64, u64) {
        match self {
            ReplayEntry::Text(text) => (estimate_prompt_tokens(messages), estimate_tokens(text)),
            ReplayEntry::Full { text, tokens_in, tokens_out } => (
                tokens_in.unwrap_or_else(|| estimate_prompt_tokens(messages)),
                tokens_out.unwrap_or_else(|| estimate_tokens(text)),
            ),
            ReplayEntry::Error { .. } => (0, 0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBackend {
    script: Vec<ReplayEntry>,
    next: usize,
}

impl ReplayBackend {
    pub fn new(script: Vec<ReplayEntry>) -> Self {
        Self { script, next: 0 }
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        Ok(Self::new(serde_json::from_str(json)?))
    }

    pub fn from_file(path: &Path) -> crate::Result<Self> {
        Ok(Self::from_json(&fs::read_to_string(path)?)?)
    }

    pub fn calls(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.next
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        check_messages(messages)?;
        let entry = self.script.get(self.next).ok_or(BackendError::ScriptExhausted(self.next))?;
        self.next += 1;
        let (tokens_in, tokens_out) = entry.cost(messages);
        match entry {
            ReplayEntry::Error { error } => Err(BackendError::Transport(error.clone())),
            ReplayEntry::Text(text) | ReplayEntry::Full { text, .. } => Ok(Completion {
                text: text.clone(),
                tokens_in,
                tokens_out,
                latency: Duration::ZERO,
            }),
        }
    }

    /// Cost of the first non-error entry from here on, which is what a
    /// retrying caller ends up paying.
    fn max_cost(&self, messages: &[ChatMessage]) -> u64 {
        self.script[self.next.min(self.script.len())..]
            .iter()
            .find(|e| !matches!(e, ReplayEntry::Error { .. }))
            .map(|e| {
                let (i, o) = e.cost(messages);
                i + o
            })
            .unwrap_or(0)
    }
}

/// Wraps a backend and rewrites `path` as a replay script after every call.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    entries: Vec<ReplayEntry>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: impl Into<PathBuf>) -> Self {
        Self { inner, path: path.into(), entries: Vec::new() }
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }

    fn flush(&self) -> Result<(), BackendError> {
        let json = serde_json::to_string_pretty(&self.entries).map_err(|e| BackendError::Protocol(e.to_string()))?;
        fs::write(&self.path, json).map_err(|e| BackendError::Transport(format!("writing {}: {e}", self.path.display())))
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        let result = self.inner.complete(messages);
        match &result {
            Ok(c) => self.entries.push(ReplayEntry::Full {
                text: c.text.clone(),
                tokens_in: Some(c.tokens_in),
                tokens_out: Some(c.tokens_out),
            }),
            Err(e) if e.is_transient() => self.entries.push(ReplayEntry::error(e.to_string())),
            Err(_) => {}
        }
        self.flush()?;
        result
    }

    fn max_cost(&self, messages: &[ChatMessage]) -> u64 {
        self.inner.max_cost(messages)
    }
}
