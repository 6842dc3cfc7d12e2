use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use marginalia_core::document::{CursorScope, Document};
use marginalia_core::engine::{Neighborhood, ViewEngine, ViewId};
use marginalia_core::prompts::{builtin_prompts, PromptSet, RenderSettings};
use marginalia_core::Provider;
use serde::{Deserialize, Serialize};

use crate::wire::WireView;

/// Mutable per-session state. Never held across an await point.
#[derive(Debug)]
pub struct SessionState {
    pub doc: Document,
    pub prompts: PromptSet,
    pub scope: Option<CursorScope>,
    /// Views of the active neighborhood in document order.
    pub active: Vec<ViewId>,
    pub cursor_seq: u64,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub engine: ViewEngine,
    state: Mutex<SessionState>,
}

impl Session {
    pub fn new(id: String, text: String, prompts: PromptSet, engine: ViewEngine) -> Self {
        let doc = Document::new(id.clone(), text);
        Self {
            id,
            engine,
            state: Mutex::new(SessionState {
                doc,
                prompts,
                scope: None,
                active: Vec::new(),
                cursor_seq: 0,
            }),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, SessionState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Makes `neighborhood` the active one and cancels running views of the
    /// previous neighborhood that it does not include.
    pub fn activate(&self, neighborhood: &Neighborhood) {
        let ids: Vec<ViewId> = neighborhood.views().map(|v| v.id.clone()).collect();
        let previous = {
            let mut st = self.lock();
            st.scope = Some(neighborhood.scope.clone());
            std::mem::replace(&mut st.active, ids.clone())
        };
        for id in previous.iter().filter(|id| !ids.contains(id)) {
            self.engine.cancel(id);
        }
    }

    /// Active views projected against the current document.
    pub fn active_views(&self) -> (u64, Option<CursorScope>, Vec<WireView>) {
        let st = self.lock();
        let views = st
            .active
            .iter()
            .filter_map(|id| self.engine.view(id))
            .map(|v| WireView::project(&v, &st.doc))
            .collect();
        (st.doc.version(), st.scope.clone(), views)
    }
}

pub struct SessionStore {
    provider: Arc<dyn Provider>,
    settings: RenderSettings,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl SessionStore {
    pub fn new(provider: Arc<dyn Provider>, settings: RenderSettings) -> Self {
        Self {
            provider,
            settings,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn create(&self, text: String) -> Arc<Session> {
        self.insert(uuid::Uuid::new_v4().simple().to_string(), text, builtin_prompts())
    }

    fn insert(&self, id: String, text: String, prompts: PromptSet) -> Arc<Session> {
        let engine = ViewEngine::new(self.provider.clone(), self.settings);
        let session = Arc::new(Session::new(id.clone(), text, prompts, engine));
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, session.clone());
        session
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> StoreSnapshot {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        let mut out: Vec<SessionSnapshot> = sessions
            .values()
            .map(|s| {
                let st = s.lock();
                SessionSnapshot {
                    session_id: s.id.clone(),
                    text: st.doc.text().to_string(),
                    prompts: st.prompts.clone(),
                }
            })
            .collect();
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        StoreSnapshot { sessions: out }
    }

    /// Restores documents and prompt sets. Views are regenerated on demand.
    pub fn restore(&self, snapshot: StoreSnapshot) {
        for s in snapshot.sessions {
            self.insert(s.session_id, s.text, s.prompts);
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(&self.snapshot())?;
        std::fs::write(path, json)
    }

    pub fn load(&self, path: &Path) -> std::io::Result<usize> {
        let bytes = std::fs::read(path)?;
        let snapshot: StoreSnapshot = serde_json::from_slice(&bytes)?;
        let n = snapshot.sessions.len();
        self.restore(snapshot);
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub text: String,
    pub prompts: PromptSet,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub sessions: Vec<SessionSnapshot>,
}
