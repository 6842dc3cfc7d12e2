//! View generation for the paragraphs around the writer's cursor.
//!
//! One engine serves one session. All cache and status mutation happens under
//! a single lock that is never held across an await point; generations run as
//! spawned tasks so a dropped client connection does not stop them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::mpsc;
use tokio_util::sync::CancellationToken;

use crate::document::{CharRange, ContentHash, CursorScope, Document, DocumentError, Paragraph};
use crate::filter::filter_final_output;
use crate::llm::{EventStream, FilterMode, Provider, StreamEvent};
use crate::markdown::{parse_display, Block};
use crate::prompts::{builtin_prompts, render, PromptError, PromptTemplate, RenderSettings, THESIS_ID};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cursor scope does not fit the document")]
    InvalidScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViewId(String);

impl ViewId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ViewId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewStatus {
    Pending,
    Streaming,
    Complete,
    Error,
    Cancelled,
}

impl ViewStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, ViewStatus::Complete | ViewStatus::Error | ViewStatus::Cancelled)
    }
}

/// The data behind one sidebar card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub id: ViewId,
    pub paragraph_index: usize,
    pub range: CharRange,
    pub content_hash: ContentHash,
    pub prompt_id: String,
    pub body_hash: String,
    pub filter: FilterMode,
    pub status: ViewStatus,
    pub raw_text: String,
    pub display_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
    pub truncated: bool,
    pub created_at_ms: u64,
}

impl View {
    fn append(&mut self, chunk: &str) {
        self.raw_text.push_str(chunk);
        self.display_text = filter_final_output(&self.raw_text, self.filter.enabled()).to_string();
    }

    pub fn display_blocks(&self) -> Vec<Block> {
        parse_display(&self.display_text)
    }

    /// The paragraph of `doc` this view still describes: same content hash,
    /// nearest to where it was generated. `None` means the view is stale.
    pub fn locate<'d>(&self, doc: &'d Document) -> Option<&'d Paragraph> {
        doc.paragraphs()
            .iter()
            .filter(|p| p.content_hash == self.content_hash)
            .min_by_key(|p| (p.index.abs_diff(self.paragraph_index), p.index))
    }
}

pub fn body_hash(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub content_hash: ContentHash,
    pub prompt_id: String,
    pub body_hash: String,
}

impl CacheKey {
    pub fn new(content_hash: ContentHash, template: &PromptTemplate) -> Self {
        Self {
            content_hash,
            prompt_id: template.id.clone(),
            body_hash: body_hash(&template.body),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewUpdate {
    Delta {
        view_id: ViewId,
        chunk: String,
        display_text: String,
    },
    Finished(View),
}

/// A view's state at subscription time plus its future updates, if it is
/// still running.
#[derive(Debug)]
pub struct ViewSubscription {
    pub snapshot: View,
    pub updates: Option<mpsc::UnboundedReceiver<ViewUpdate>>,
}

impl ViewSubscription {
    /// Waits for the terminal state.
    pub async fn finished(self) -> View {
        let Some(mut rx) = self.updates else {
            return self.snapshot;
        };
        let mut last = self.snapshot;
        while let Some(update) = rx.recv().await {
            match update {
                ViewUpdate::Finished(view) => return view,
                ViewUpdate::Delta { chunk, .. } => last.append(&chunk),
            }
        }
        last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Cached,
    Joined,
    Started,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodEntry {
    pub paragraph_index: usize,
    pub views: Vec<View>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub scope: CursorScope,
    /// Document order.
    pub entries: Vec<NeighborhoodEntry>,
    /// Every view of this neighborhood in scheduling priority order:
    /// current, succeeding, preceding.
    pub priority: Vec<ViewId>,
    /// Views whose generation this request started.
    pub started: Vec<ViewId>,
}

impl Neighborhood {
    pub fn views(&self) -> impl Iterator<Item = &View> {
        self.entries.iter().flat_map(|e| &e.views)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Invalidation {
    pub dropped_cache_entries: usize,
    pub cancelled: Vec<ViewId>,
}

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

fn system_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

struct Flight {
    view_id: ViewId,
    cancel: CancellationToken,
}

#[derive(Default)]
struct State {
    next_view: u64,
    views: HashMap<ViewId, View>,
    cache: HashMap<CacheKey, ViewId>,
    in_flight: HashMap<CacheKey, Flight>,
    subscribers: HashMap<ViewId, Vec<mpsc::UnboundedSender<ViewUpdate>>>,
    generations: u64,
}

impl State {
    fn notify(&mut self, id: &ViewId, update: ViewUpdate) {
        if let Some(subs) = self.subscribers.get_mut(id) {
            subs.retain(|tx| tx.send(update.clone()).is_ok());
        }
    }

    fn finish(&mut self, key: &CacheKey, status: ViewStatus, detail: Option<String>) {
        let Some(flight) = self.in_flight.remove(key) else {
            return;
        };
        let view = self.views.get_mut(&flight.view_id).expect("in-flight view is registered");
        view.status = status;
        view.error_detail = detail;
        let snapshot = view.clone();
        if status == ViewStatus::Complete {
            self.cache.insert(key.clone(), flight.view_id.clone());
        }
        self.notify(&flight.view_id, ViewUpdate::Finished(snapshot));
        self.subscribers.remove(&flight.view_id);
    }

    fn owns(&self, key: &CacheKey, id: &ViewId) -> bool {
        self.in_flight.get(key).is_some_and(|f| &f.view_id == id)
    }
}

struct Inner {
    provider: Arc<dyn Provider>,
    settings: RenderSettings,
    clock: Clock,
    state: Mutex<State>,
}

impl Inner {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Clone)]
pub struct ViewEngine {
    inner: Arc<Inner>,
}

impl fmt::Debug for ViewEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ViewEngine")
            .field("provider", &self.inner.provider.name())
            .finish_non_exhaustive()
    }
}

impl ViewEngine {
    pub fn new(provider: Arc<dyn Provider>, settings: RenderSettings) -> Self {
        Self::with_clock(provider, settings, Arc::new(system_clock))
    }

    pub fn with_clock(provider: Arc<dyn Provider>, mut settings: RenderSettings, clock: Clock) -> Self {
        settings.context_budget_chars = settings.context_budget_chars.min(provider.context_budget());
        Self {
            inner: Arc::new(Inner {
                provider,
                settings,
                clock,
                state: Mutex::new(State::default()),
            }),
        }
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.inner.settings
    }

    /// Returns the cached or in-flight view for this paragraph and prompt, or
    /// starts a new generation. Must be called inside a tokio runtime.
    pub fn generate(&self, paragraph: &Paragraph, template: &PromptTemplate) -> Result<(View, Origin), EngineError> {
        let key = CacheKey::new(paragraph.content_hash, template);
        let mut st = self.inner.lock();
        if let Some(id) = st.cache.get(&key) {
            return Ok((st.views[id].clone(), Origin::Cached));
        }
        if let Some(flight) = st.in_flight.get(&key) {
            return Ok((st.views[&flight.view_id].clone(), Origin::Joined));
        }

        let request = render(template, &paragraph.text, None, &self.inner.settings)?;
        st.next_view += 1;
        st.generations += 1;
        let id = ViewId(format!("v{}", st.next_view));
        let view = View {
            id: id.clone(),
            paragraph_index: paragraph.index,
            range: paragraph.range,
            content_hash: paragraph.content_hash,
            prompt_id: template.id.clone(),
            body_hash: key.body_hash.clone(),
            filter: request.filter,
            status: ViewStatus::Pending,
            raw_text: String::new(),
            display_text: String::new(),
            error_detail: None,
            truncated: request.truncated,
            created_at_ms: (self.inner.clock)(),
        };
        let cancel = CancellationToken::new();
        st.views.insert(id.clone(), view.clone());
        st.in_flight.insert(
            key.clone(),
            Flight {
                view_id: id.clone(),
                cancel: cancel.clone(),
            },
        );
        // Issued under the lock so provider call order equals scheduling order.
        let stream = self.inner.provider.complete_streaming(&request, cancel.clone());
        drop(st);

        tokio::spawn(drive(self.inner.clone(), key, id, stream, cancel));
        Ok((view, Origin::Started))
    }

    /// Generates views for every paragraph of the scope with one prompt.
    /// Scheduling order is current, succeeding, preceding.
    pub fn request_views(
        &self,
        scope: &CursorScope,
        template: &PromptTemplate,
        doc: &Document,
    ) -> Result<Neighborhood, EngineError> {
        let count = doc.paragraphs().len();
        let valid = scope.paragraph_index < count
            && scope.neighborhood.contains(&scope.paragraph_index)
            && scope.neighborhood.iter().all(|&i| i < count)
            && scope.neighborhood.windows(2).all(|w| w[1] == w[0] + 1);
        if !valid {
            return Err(EngineError::InvalidScope);
        }
        let order = std::iter::once(scope.paragraph_index)
            .chain(scope.succeeding())
            .chain(scope.preceding());
        self.schedule(scope, order, template, doc)
    }

    /// First view of a session: thesis prompt on the first paragraph only.
    pub fn bootstrap(&self, doc: &Document) -> Result<Neighborhood, EngineError> {
        if doc.is_empty() {
            return Err(DocumentError::Empty.into());
        }
        let scope = CursorScope::centered_on(0, doc.paragraphs().len());
        let builtins = builtin_prompts();
        let thesis = builtins.require(THESIS_ID)?;
        self.schedule(&scope, std::iter::once(0), thesis, doc)
    }

    fn schedule(
        &self,
        scope: &CursorScope,
        order: impl Iterator<Item = usize>,
        template: &PromptTemplate,
        doc: &Document,
    ) -> Result<Neighborhood, EngineError> {
        let mut by_index: HashMap<usize, View> = HashMap::new();
        let mut priority = Vec::new();
        let mut started = Vec::new();
        for index in order {
            let paragraph = doc.paragraph(index).ok_or(EngineError::InvalidScope)?;
            let (view, origin) = self.generate(paragraph, template)?;
            priority.push(view.id.clone());
            if origin == Origin::Started {
                started.push(view.id.clone());
            }
            by_index.insert(index, view);
        }
        let entries = scope
            .neighborhood
            .iter()
            .map(|&i| NeighborhoodEntry {
                paragraph_index: i,
                views: by_index.remove(&i).into_iter().collect(),
            })
            .collect();
        Ok(Neighborhood {
            scope: scope.clone(),
            entries,
            priority,
            started,
        })
    }

    pub fn view(&self, id: &ViewId) -> Option<View> {
        self.inner.lock().views.get(id).cloned()
    }

    pub fn subscribe(&self, id: &ViewId) -> Option<ViewSubscription> {
        let mut st = self.inner.lock();
        let snapshot = st.views.get(id)?.clone();
        if snapshot.status.is_terminal() {
            return Some(ViewSubscription {
                snapshot,
                updates: None,
            });
        }
        let (tx, rx) = mpsc::unbounded_channel();
        st.subscribers.entry(id.clone()).or_default().push(tx);
        Some(ViewSubscription {
            snapshot,
            updates: Some(rx),
        })
    }

    /// Waits until the view reaches a terminal status.
    pub async fn wait(&self, id: &ViewId) -> Option<View> {
        Some(self.subscribe(id)?.finished().await)
    }

    /// Waits for every view of a neighborhood and returns it with fresh views.
    pub async fn settle(&self, neighborhood: &Neighborhood) -> Neighborhood {
        let mut out = neighborhood.clone();
        for entry in &mut out.entries {
            for view in &mut entry.views {
                if let Some(done) = self.wait(&view.id).await {
                    *view = done;
                }
            }
        }
        out
    }

    /// Drops cached views for the given paragraph hashes and cancels any
    /// generation still running for them.
    pub fn invalidate(&self, hashes: &[ContentHash]) -> Invalidation {
        let stale: HashSet<&ContentHash> = hashes.iter().collect();
        let mut st = self.inner.lock();
        let before = st.cache.len();
        st.cache.retain(|k, _| !stale.contains(&k.content_hash));
        let dropped_cache_entries = before - st.cache.len();

        let doomed: Vec<CacheKey> = st
            .in_flight
            .keys()
            .filter(|k| stale.contains(&k.content_hash))
            .cloned()
            .collect();
        let mut cancelled = Vec::new();
        for key in doomed {
            if let Some(flight) = st.in_flight.get(&key) {
                flight.cancel.cancel();
                cancelled.push(flight.view_id.clone());
            }
            st.finish(&key, ViewStatus::Cancelled, Some("paragraph edited".into()));
        }
        cancelled.sort();
        Invalidation {
            dropped_cache_entries,
            cancelled,
        }
    }

    /// Cancels one running generation. Returns false if it was not running.
    pub fn cancel(&self, id: &ViewId) -> bool {
        let mut st = self.inner.lock();
        let key = st
            .in_flight
            .iter()
            .find(|(_, f)| &f.view_id == id)
            .map(|(k, f)| {
                f.cancel.cancel();
                k.clone()
            });
        match key {
            Some(key) => {
                st.finish(&key, ViewStatus::Cancelled, Some("cancelled".into()));
                true
            }
            None => false,
        }
    }

    pub fn cached(&self, key: &CacheKey) -> Option<View> {
        let st = self.inner.lock();
        st.cache.get(key).map(|id| st.views[id].clone())
    }

    pub fn cache_len(&self) -> usize {
        self.inner.lock().cache.len()
    }

    pub fn cache_keys(&self) -> Vec<CacheKey> {
        self.inner.lock().cache.keys().cloned().collect()
    }

    pub fn in_flight_len(&self) -> usize {
        self.inner.lock().in_flight.len()
    }

    /// Number of provider requests issued so far.
    pub fn generations(&self) -> u64 {
        self.inner.lock().generations
    }
}

async fn drive(inner: Arc<Inner>, key: CacheKey, id: ViewId, mut stream: EventStream, cancel: CancellationToken) {
    loop {
        let event = tokio::select! {
            biased;
            _ = cancel.cancelled() => None,
            event = stream.next() => event,
        };
        let mut st = inner.lock();
        if !st.owns(&key, &id) {
            return;
        }
        match event {
            Some(StreamEvent::Delta(chunk)) => {
                let view = st.views.get_mut(&id).expect("in-flight view is registered");
                view.status = ViewStatus::Streaming;
                view.append(&chunk);
                let update = ViewUpdate::Delta {
                    view_id: id.clone(),
                    chunk,
                    display_text: view.display_text.clone(),
                };
                st.notify(&id, update);
            }
            Some(StreamEvent::Done(_)) => {
                st.finish(&key, ViewStatus::Complete, None);
                return;
            }
            Some(StreamEvent::Error(err)) => {
                tracing::warn!(view = %id, error = %err, "view generation failed");
                st.finish(&key, ViewStatus::Error, Some(err.to_string()));
                return;
            }
            None => {
                st.finish(&key, ViewStatus::Cancelled, Some("cancelled".into()));
                return;
            }
        }
    }
}
