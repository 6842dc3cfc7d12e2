//! Streaming client for OpenAI-style `/chat/completions` endpoints.
//!
//! The request carries two messages: `system` = instruction, `user` = context.
//! The response is parsed as server-sent `data:` lines until `[DONE]`.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use futures::stream::{self, BoxStream, StreamExt};
use serde_json::{json, Value};
use tokio_util::sync::CancellationToken;

use super::{
    check_budget, Completion, ConfigError, EventStream, Provider, ProviderConfig, ProviderError,
    ProviderErrorKind, ProviderRequest, StreamEvent,
};

const RETRY_BACKOFF: Duration = Duration::from_millis(250);

#[derive(Debug, Clone)]
pub struct OpenAiCompatProvider {
    config: Arc<ProviderConfig>,
    client: reqwest::Client,
}

impl OpenAiCompatProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .connect_timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|_| ConfigError::BadEndpoint(config.endpoint.clone()))?;
        Ok(Self {
            config: Arc::new(config),
            client,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn payload(&self, req: &ProviderRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": req.instruction},
                {"role": "user", "content": req.context},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "stream": true,
        })
    }
}

type Body = BoxStream<'static, Result<Vec<u8>, reqwest::Error>>;

enum Phase {
    Connect { attempt: u32 },
    Body { body: Body, buf: Vec<u8> },
    Finished,
}

struct StreamState {
    client: reqwest::Client,
    config: Arc<ProviderConfig>,
    payload: Value,
    cancel: CancellationToken,
    phase: Phase,
    queue: VecDeque<StreamEvent>,
    finish_reason: Option<String>,
}

async fn connect(client: reqwest::Client, config: Arc<ProviderConfig>, payload: Value) -> Result<Body, ProviderError> {
    let key = config.api_key.as_ref().map(|k| k.expose()).unwrap_or_default();
    let send = client.post(&config.endpoint).bearer_auth(key).json(&payload).send();
    let response = tokio::time::timeout(Duration::from_secs(config.timeout_secs), send)
        .await
        .map_err(|_| ProviderError::new(ProviderErrorKind::Timeout, "no response before timeout"))?
        .map_err(|e| {
            let kind = if e.is_timeout() {
                ProviderErrorKind::Timeout
            } else {
                ProviderErrorKind::Http
            };
            ProviderError::new(kind, format!("request failed: {}", e.without_url()))
        })?;

    let status = response.status();
    if status.is_success() {
        return Ok(response
            .bytes_stream()
            .map(|chunk| chunk.map(|b| b.to_vec()))
            .boxed());
    }
    let detail: String = response.text().await.unwrap_or_default().chars().take(300).collect();
    let err = match status.as_u16() {
        401 | 403 => ProviderError::new(
            ProviderErrorKind::Auth,
            format!("provider rejected the credential ({status}); check the API key configuration"),
        )
        .non_retryable(),
        429 | 500..=599 => ProviderError::new(ProviderErrorKind::Http, format!("{status}: {detail}")),
        _ => ProviderError::new(ProviderErrorKind::Http, format!("{status}: {detail}")).non_retryable(),
    };
    Err(err)
}

impl StreamState {
    fn timeout(&self) -> Duration {
        Duration::from_secs(self.config.timeout_secs)
    }

    /// Parses complete lines out of `buf`, queueing events.
    fn drain_lines(&mut self, buf: &mut Vec<u8>, flush: bool) {
        loop {
            let line = match buf.iter().position(|&b| b == b'\n') {
                Some(pos) => buf.drain(..=pos).collect::<Vec<u8>>(),
                None if flush && !buf.is_empty() => std::mem::take(buf),
                None => return,
            };
            let line = String::from_utf8_lossy(&line);
            let line = line.trim_end_matches(['\n', '\r']);
            let Some(data) = line.strip_prefix("data:") else {
                continue;
            };
            let data = data.trim();
            if data == "[DONE]" {
                let finish_reason = self.finish_reason.take().unwrap_or_else(|| "stop".into());
                self.queue.push_back(StreamEvent::Done(Completion { finish_reason }));
                return;
            }
            match serde_json::from_str::<Value>(data) {
                Ok(value) => self.handle_chunk(&value),
                Err(e) => {
                    self.queue.push_back(StreamEvent::Error(
                        ProviderError::new(ProviderErrorKind::Protocol, format!("bad chunk: {e}"))
                            .non_retryable(),
                    ));
                    return;
                }
            }
        }
    }

    fn handle_chunk(&mut self, value: &Value) {
        if let Some(err) = value.get("error") {
            let message = err.get("message").and_then(Value::as_str).unwrap_or("provider error");
            self.queue.push_back(StreamEvent::Error(
                ProviderError::new(ProviderErrorKind::Http, message).non_retryable(),
            ));
            return;
        }
        let choice = &value["choices"][0];
        if let Some(content) = choice["delta"]["content"].as_str() {
            if !content.is_empty() {
                self.queue.push_back(StreamEvent::Delta(content.to_string()));
            }
        }
        if let Some(reason) = choice["finish_reason"].as_str() {
            self.finish_reason = Some(reason.to_string());
        }
    }

    async fn step(&mut self) -> Option<()> {
        let phase = std::mem::replace(&mut self.phase, Phase::Finished);
        match phase {
            Phase::Finished => None,
            Phase::Connect { attempt } => {
                let cancel = self.cancel.clone();
                let attempt_fut = connect(self.client.clone(), self.config.clone(), self.payload.clone());
                let result = tokio::select! {
                    _ = cancel.cancelled() => return None,
                    r = attempt_fut => r,
                };
                match result {
                    Ok(body) => {
                        self.phase = Phase::Body { body, buf: Vec::new() };
                    }
                    Err(err) if err.retryable && attempt < self.config.retries => {
                        tracing::debug!(attempt, error = %err, "retrying provider request");
                        tokio::select! {
                            _ = cancel.cancelled() => return None,
                            _ = tokio::time::sleep(RETRY_BACKOFF * (attempt + 1)) => {}
                        }
                        self.phase = Phase::Connect { attempt: attempt + 1 };
                    }
                    Err(err) => self.queue.push_back(StreamEvent::Error(err)),
                }
                Some(())
            }
            Phase::Body { mut body, mut buf } => {
                let cancel = self.cancel.clone();
                let idle = self.timeout();
                let next = tokio::select! {
                    _ = cancel.cancelled() => return None,
                    n = tokio::time::timeout(idle, body.next()) => n,
                };
                match next {
                    Err(_) => self.queue.push_back(StreamEvent::Error(ProviderError::new(
                        ProviderErrorKind::Timeout,
                        "stream stalled past timeout",
                    ))),
                    Ok(Some(Ok(bytes))) => {
                        buf.extend_from_slice(&bytes);
                        self.drain_lines(&mut buf, false);
                        self.phase = Phase::Body { body, buf };
                    }
                    Ok(Some(Err(e))) => self.queue.push_back(StreamEvent::Error(ProviderError::new(
                        ProviderErrorKind::Http,
                        format!("stream broke: {}", e.without_url()),
                    ))),
                    Ok(None) => {
                        self.drain_lines(&mut buf, true);
                        if !self.queue.iter().any(StreamEvent::is_terminal) {
                            let event = match self.finish_reason.take() {
                                Some(finish_reason) => StreamEvent::Done(Completion { finish_reason }),
                                None => StreamEvent::Error(
                                    ProviderError::new(ProviderErrorKind::Protocol, "stream ended without [DONE]")
                                        .non_retryable(),
                                ),
                            };
                            self.queue.push_back(event);
                        }
                    }
                }
                Some(())
            }
        }
    }
}

impl Provider for OpenAiCompatProvider {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn context_budget(&self) -> usize {
        self.config.context_budget_chars
    }

    fn complete_streaming(&self, req: &ProviderRequest, cancel: CancellationToken) -> EventStream {
        if let Err(err) = check_budget(req, self.context_budget()) {
            return stream::iter([StreamEvent::Error(err)]).boxed();
        }
        let state = StreamState {
            client: self.client.clone(),
            config: self.config.clone(),
            payload: self.payload(req),
            cancel,
            phase: Phase::Connect { attempt: 0 },
            queue: VecDeque::new(),
            finish_reason: None,
        };
        stream::unfold(state, |mut state| async move {
            loop {
                if let Some(event) = state.queue.pop_front() {
                    if event.is_terminal() {
                        state.queue.clear();
                        state.phase = Phase::Finished;
                    }
                    return Some((event, state));
                }
                if state.cancel.is_cancelled() {
                    return None;
                }
                state.step().await?;
            }
        })
        .boxed()
    }
}
