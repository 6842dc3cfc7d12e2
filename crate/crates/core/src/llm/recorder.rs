use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use futures::StreamExt;
use tokio_util::sync::CancellationToken;

use super::{EventStream, Fixture, Provider, ProviderErrorKind, ProviderRequest, StreamEvent, Terminal};

/// Passes requests through to another provider and captures every finished
/// response as a [`Fixture`] for [`super::MockProvider`] to replay.
pub struct RecordingProvider {
    inner: Arc<dyn Provider>,
    recorded: Arc<Mutex<BTreeMap<String, Fixture>>>,
}

impl RecordingProvider {
    pub fn new(inner: Arc<dyn Provider>) -> Self {
        Self {
            inner,
            recorded: Arc::default(),
        }
    }

    /// Captured fixtures ordered by fingerprint.
    pub fn fixtures(&self) -> Vec<Fixture> {
        self.recorded.lock().unwrap().values().cloned().collect()
    }
}

impl Provider for RecordingProvider {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn context_budget(&self) -> usize {
        self.inner.context_budget()
    }

    fn complete_streaming(&self, req: &ProviderRequest, cancel: CancellationToken) -> EventStream {
        let recorded = self.recorded.clone();
        let mut fixture = Fixture::done(req.fingerprint(), &[]);
        self.inner
            .complete_streaming(req, cancel)
            .inspect(move |event| match event {
                StreamEvent::Delta(chunk) => fixture.chunks.push(chunk.clone()),
                StreamEvent::Done(_) => {
                    recorded.lock().unwrap().insert(fixture.fingerprint.clone(), fixture.clone());
                }
                // The mock applies the same budget check before any lookup.
                StreamEvent::Error(e) if e.kind == ProviderErrorKind::ContextTooLong => {}
                StreamEvent::Error(e) => {
                    let mut failed = fixture.clone();
                    failed.terminal = Terminal::Error;
                    failed.error = Some(e.message.clone());
                    failed.error_kind = Some(e.kind);
                    recorded.lock().unwrap().insert(failed.fingerprint.clone(), failed);
                }
            })
            .boxed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{FilterMode, MockProvider};

    fn request(context: &str) -> ProviderRequest {
        ProviderRequest {
            instruction: "observe".into(),
            context: context.into(),
            truncated: false,
            max_output_tokens: 64,
            temperature: 0.7,
            filter: FilterMode::None,
        }
    }

    #[tokio::test]
    async fn replaying_recorded_fixtures_yields_identical_events() {
        let mut failing = Fixture::failing(request("bad").fingerprint(), &["par"], "upstream refused");
        failing.error_kind = Some(ProviderErrorKind::Auth);
        let source = Arc::new(MockProvider::with_fixtures([failing]).budget(50));
        let recorder = RecordingProvider::new(source);

        let mut first = Vec::new();
        for ctx in ["good paragraph", "bad", &"x".repeat(60)] {
            let events: Vec<_> = recorder.complete_streaming(&request(ctx), CancellationToken::new()).collect().await;
            first.push(events);
        }
        let fixtures = recorder.fixtures();
        assert_eq!(fixtures.len(), 2, "budget rejections are not recorded");

        let replay = MockProvider::with_fixtures(fixtures).fallback(crate::llm::Fallback::Error).budget(50);
        for (ctx, expected) in ["good paragraph", "bad", &"x".repeat(60)].into_iter().zip(&first) {
            let events: Vec<_> = replay.complete_streaming(&request(ctx), CancellationToken::new()).collect().await;
            assert_eq!(&events, expected, "{ctx}");
        }
    }
}
