//! Chat-completion provider abstraction with token streaming.

mod config;
mod fixture;
mod mock;
mod openai_compat;
mod recorder;

use std::fmt;

use futures::stream::BoxStream;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio_util::sync::CancellationToken;

pub use config::{ConfigError, ProviderConfig, Secret};
pub use fixture::{read_fixtures, write_fixtures, Fixture, FixtureError, Terminal};
pub use mock::{CallRecord, Fallback, MockProvider};
pub use openai_compat::OpenAiCompatProvider;
pub use recorder::RecordingProvider;

/// Roughly four characters per token for English prose.
pub const CHARS_PER_TOKEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterMode {
    #[default]
    None,
    FinalOutput,
}

impl FilterMode {
    pub fn enabled(self) -> bool {
        self == FilterMode::FinalOutput
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    /// System-side framing plus the prompt body.
    pub instruction: String,
    /// The writer's paragraph, possibly prefixed by the document title.
    pub context: String,
    pub truncated: bool,
    pub max_output_tokens: u32,
    pub temperature: f32,
    pub filter: FilterMode,
}

impl ProviderRequest {
    /// Digest identifying the request for fixture replay. Sampling settings
    /// are deliberately excluded so fixtures survive parameter tweaks.
    pub fn fingerprint(&self) -> String {
        fingerprint(&self.instruction, &self.context)
    }
}

pub fn fingerprint(instruction: &str, context: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update((instruction.len() as u64).to_le_bytes());
    hasher.update(instruction.as_bytes());
    hasher.update(context.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub finish_reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Timeout,
    Auth,
    ContextTooLong,
    Http,
    Protocol,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, message: impl Into<String>) -> Self {
        let retryable = matches!(kind, ProviderErrorKind::Timeout | ProviderErrorKind::Http);
        Self {
            kind,
            message: message.into(),
            retryable,
        }
    }

    pub fn non_retryable(mut self) -> Self {
        self.retryable = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum StreamEvent {
    Delta(String),
    Done(Completion),
    Error(ProviderError),
}

impl StreamEvent {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, StreamEvent::Delta(_))
    }
}

pub type EventStream = BoxStream<'static, StreamEvent>;

/// A streaming chat-completion backend.
///
/// Implementations emit zero or more `Delta`s followed by exactly one
/// terminal event. When `cancel` fires the stream ends between chunks
/// without a terminal event. Calling `complete_streaming` counts as issuing
/// the request; the returned stream may do its I/O lazily.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;

    fn context_budget(&self) -> usize;

    fn complete_streaming(&self, req: &ProviderRequest, cancel: CancellationToken) -> EventStream;
}

impl fmt::Debug for dyn Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Provider").field("name", &self.name()).finish()
    }
}

pub(crate) fn check_budget(req: &ProviderRequest, budget: usize) -> Result<(), ProviderError> {
    let len = req.context.chars().count();
    if len > budget {
        return Err(ProviderError::new(
            ProviderErrorKind::ContextTooLong,
            format!("context is {len} characters, budget is {budget}"),
        )
        .non_retryable());
    }
    Ok(())
}

pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(CHARS_PER_TOKEN)
}

/// Fits `text` into `budget_chars` characters.
///
/// Text within budget is returned unchanged. Otherwise the cut lands after
/// the last sentence-ending `.`, `!` or `?` (followed by whitespace) that
/// fits; with no such boundary the text is cut hard at the budget.
pub fn estimate_and_truncate(text: &str, budget_chars: usize) -> (String, bool) {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() <= budget_chars {
        return (text.to_string(), false);
    }
    // chars[budget_chars] exists, so every k <= budget_chars has a successor.
    let boundary = (1..=budget_chars)
        .rev()
        .find(|&k| matches!(chars[k - 1], '.' | '!' | '?') && chars[k].is_whitespace());
    let cut = boundary.unwrap_or(budget_chars);
    (chars[..cut].iter().collect(), true)
}
