//! HTTP + server-sent events service over the view engine.
//!
//! One in-memory session per document. Cursor requests answer with an SSE
//! stream whose events per view follow
//! `view_pending view_delta* (view_done | view_error)`.

use std::sync::Arc;
use std::time::Duration;

use marginalia_core::prompts::RenderSettings;
use marginalia_core::Provider;

pub mod error;
pub mod routes;
pub mod session;
pub mod transcript;
pub mod wire;

pub use error::ApiError;
pub use routes::router;
pub use session::{Session, SessionStore, StoreSnapshot};
pub use transcript::{parse_sse, SseEvent};
pub use wire::{ViewDelta, ViewsSnapshot, WireView};

pub const DEFAULT_MAX_DOCUMENT_BYTES: usize = 1024 * 1024;
pub const DEFAULT_DEBOUNCE: Duration = Duration::from_millis(300);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub max_document_bytes: usize,
    /// Cursor requests arriving within this window of a newer one are
    /// answered with a `superseded` event instead of generating.
    pub debounce: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            max_document_bytes: DEFAULT_MAX_DOCUMENT_BYTES,
            debounce: DEFAULT_DEBOUNCE,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub config: ServerConfig,
}

impl AppState {
    pub fn new(provider: Arc<dyn Provider>, settings: RenderSettings, config: ServerConfig) -> Self {
        Self {
            store: Arc::new(SessionStore::new(provider, settings)),
            config,
        }
    }
}
