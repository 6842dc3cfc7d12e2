use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use tokio_util::sync::CancellationToken;

use super::{
    check_budget, Completion, EventStream, Fixture, FilterMode, Provider, ProviderError,
    ProviderErrorKind, ProviderRequest, StreamEvent, Terminal,
};

/// What the mock answers when no fixture matches the request fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fallback {
    /// `OBSERVATION: <start of context>`, streamed in fixed-size chunks.
    EchoSummary { chunk_chars: usize },
    /// A non-retryable error; useful for asserting that fixtures cover a run.
    Error,
}

impl Default for Fallback {
    fn default() -> Self {
        Fallback::EchoSummary { chunk_chars: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub fingerprint: String,
    pub context: String,
    pub filter: FilterMode,
}

/// Deterministic provider replaying scripted responses.
#[derive(Debug, Default)]
pub struct MockProvider {
    fixtures: HashMap<String, Fixture>,
    fallback: Fallback,
    budget: Option<usize>,
    chunk_delay: Duration,
    calls: Mutex<Vec<CallRecord>>,
}

const ECHO_CHARS: usize = 80;

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixtures(fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        Self::new().fixtures(fixtures)
    }

    pub fn fixtures(mut self, fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        self.fixtures
            .extend(fixtures.into_iter().map(|f| (f.fingerprint.clone(), f)));
        self
    }

    pub fn fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn budget(mut self, budget_chars: usize) -> Self {
        self.budget = Some(budget_chars);
        self
    }

    /// Delay applied before every fallback chunk.
    pub fn chunk_delay(mut self, delay: Duration) -> Self {
        self.chunk_delay = delay;
        self
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn clear_calls(&self) {
        self.calls.lock().unwrap().clear();
    }

    /// The exact text the fallback produces for a request.
    pub fn echo_text(req: &ProviderRequest) -> String {
        let snippet: String = req.context.chars().take(ECHO_CHARS).collect();
        format!("OBSERVATION: {snippet}")
    }

    fn script(&self, req: &ProviderRequest) -> Fixture {
        let fingerprint = req.fingerprint();
        if let Some(fixture) = self.fixtures.get(&fingerprint) {
            return fixture.clone();
        }
        match self.fallback {
            Fallback::EchoSummary { chunk_chars } => {
                let chars: Vec<char> = Self::echo_text(req).chars().collect();
                let chunks: Vec<String> = chars
                    .chunks(chunk_chars.max(1))
                    .map(|c| c.iter().collect())
                    .collect();
                let delays = vec![self.chunk_delay.as_millis() as u64; chunks.len()];
                Fixture {
                    fingerprint,
                    chunks,
                    terminal: Terminal::Done,
                    delays_ms: delays,
                    error: None,
                    error_kind: None,
                }
            }
            Fallback::Error => Fixture {
                fingerprint,
                chunks: Vec::new(),
                terminal: Terminal::Error,
                delays_ms: Vec::new(),
                error: Some("no fixture for request".into()),
                error_kind: None,
            },
        }
    }
}

pub(crate) fn replay(fixture: Fixture, cancel: CancellationToken) -> EventStream {
    let terminal = match fixture.terminal {
        Terminal::Done => StreamEvent::Done(Completion {
            finish_reason: "stop".into(),
        }),
        Terminal::Error => StreamEvent::Error(
            ProviderError::new(
                fixture.error_kind.unwrap_or(ProviderErrorKind::Scripted),
                fixture.error.clone().unwrap_or_else(|| "scripted failure".into()),
            )
            .non_retryable(),
        ),
    };
    let steps: Vec<(u64, StreamEvent)> = fixture
        .chunks
        .into_iter()
        .enumerate()
        .map(|(i, c)| (fixture.delays_ms.get(i).copied().unwrap_or(0), StreamEvent::Delta(c)))
        .chain(std::iter::once((0, terminal)))
        .collect();

    stream::unfold(
        (steps.into_iter(), cancel),
        |(mut steps, cancel)| async move {
            let (delay, event) = steps.next()?;
            if cancel.is_cancelled() {
                return None;
            }
            if delay > 0 {
                tokio::select! {
                    _ = cancel.cancelled() => return None,
                    _ = tokio::time::sleep(Duration::from_millis(delay)) => {}
                }
            }
            Some((event, (steps, cancel)))
        },
    )
    .boxed()
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn context_budget(&self) -> usize {
        self.budget.unwrap_or(usize::MAX)
    }

    fn complete_streaming(&self, req: &ProviderRequest, cancel: CancellationToken) -> EventStream {
        if let Err(err) = check_budget(req, self.context_budget()) {
            return stream::iter([StreamEvent::Error(err)]).boxed();
        }
        self.calls.lock().unwrap().push(CallRecord {
            fingerprint: req.fingerprint(),
            context: req.context.clone(),
            filter: req.filter,
        });
        replay(self.script(req), cancel)
    }
}
