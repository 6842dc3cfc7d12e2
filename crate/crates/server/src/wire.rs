//! JSON shapes exchanged with clients.

use marginalia_core::document::{CharRange, ContentHash, CursorScope, Document, Paragraph};
use marginalia_core::engine::{View, ViewId, ViewStatus};
use marginalia_core::markdown::Block;
use serde::{Deserialize, Serialize};

/// One sidebar card as sent to the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireView {
    pub view_id: ViewId,
    pub paragraph_index: usize,
    pub range: CharRange,
    pub prompt_id: String,
    pub status: ViewStatus,
    pub display_blocks: Vec<Block>,
    /// The paragraph this view was generated from has since been edited.
    pub stale: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl WireView {
    /// Projects a view against the current document. A view whose text
    /// still exists follows its paragraph; otherwise it keeps its original
    /// position and is marked stale.
    pub fn project(view: &View, doc: &Document) -> Self {
        let (paragraph_index, range, stale) = match view.locate(doc) {
            Some(p) => (p.index, p.range, false),
            None => (view.paragraph_index, view.range, true),
        };
        Self {
            view_id: view.id.clone(),
            paragraph_index,
            range,
            prompt_id: view.prompt_id.clone(),
            status: view.status,
            display_blocks: view.display_blocks(),
            stale,
            error: view.error_detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphSummary {
    pub index: usize,
    pub range: CharRange,
    pub content_hash: ContentHash,
}

impl From<&Paragraph> for ParagraphSummary {
    fn from(p: &Paragraph) -> Self {
        Self {
            index: p.index,
            range: p.range,
            content_hash: p.content_hash,
        }
    }
}

pub fn summarize(doc: &Document) -> Vec<ParagraphSummary> {
    doc.paragraphs().iter().map(ParagraphSummary::from).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub version: u64,
    /// No paragraphs yet; the client should show its empty-document state.
    pub onboarding: bool,
    pub paragraphs: Vec<ParagraphSummary>,
    pub scope: Option<CursorScope>,
    pub views: Vec<WireView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentState {
    pub version: u64,
    pub text: String,
    pub paragraphs: Vec<ParagraphSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdateDocument {
    pub text: String,
    pub base_version: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentUpdated {
    pub version: u64,
    /// New-document indices whose views need regenerating.
    pub changed: Vec<usize>,
    pub inserted: Vec<usize>,
    pub deleted: Vec<usize>,
    pub cancelled_views: Vec<ViewId>,
    pub paragraphs: Vec<ParagraphSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CursorRequest {
    pub offset: usize,
    pub prompt_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewDelta {
    pub view_id: ViewId,
    /// Raw text appended by this chunk.
    pub delta: String,
    /// Filtered card text so far.
    pub display_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewsSnapshot {
    pub version: u64,
    pub scope: Option<CursorScope>,
    pub views: Vec<WireView>,
}

/// SSE event name for a terminal view.
pub fn terminal_event_name(status: ViewStatus) -> &'static str {
    match status {
        ViewStatus::Complete => "view_done",
        _ => "view_error",
    }
}
