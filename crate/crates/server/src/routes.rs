use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::stream::{self, BoxStream, StreamExt};
use marginalia_core::diff_paragraphs;
use marginalia_core::engine::{ViewSubscription, ViewUpdate};
use marginalia_core::prompts::{ExportedPrompt, PromptDraft, PromptEdit, PromptSet, PromptTemplate};
use serde::Serialize;

use crate::error::ApiError;
use crate::session::Session;
use crate::wire::{
    summarize, terminal_event_name, CreateSession, CursorRequest, DocumentState, DocumentUpdated, SessionCreated,
    UpdateDocument, ViewDelta, ViewsSnapshot, WireView,
};
use crate::AppState;

type EventStream = BoxStream<'static, Result<Event, Infallible>>;

pub fn router(state: AppState) -> Router {
    // JSON escaping can inflate a document several times over; the exact
    // byte limit is enforced on the decoded text.
    let body_limit = state.config.max_document_bytes.saturating_mul(6).saturating_add(64 * 1024);
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", axum::routing::post(create_session))
        .route("/sessions/{id}/document", get(get_document).put(update_document))
        .route("/sessions/{id}/cursor", get(cursor_query).post(cursor_json))
        .route("/sessions/{id}/views", get(get_views))
        .route("/sessions/{id}/prompts", get(list_prompts).post(create_prompt))
        .route("/sessions/{id}/prompts/export", get(export_prompts))
        .route("/sessions/{id}/prompts/import", axum::routing::post(import_prompts))
        .route("/sessions/{id}/prompts/{prompt_id}", get(get_prompt).put(edit_prompt))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

fn session(state: &AppState, id: &str) -> Result<Arc<Session>, ApiError> {
    state.store.get(id).ok_or(ApiError::SessionNotFound)
}

fn check_size(state: &AppState, text: &str) -> Result<(), ApiError> {
    let limit = state.config.max_document_bytes;
    if text.len() > limit {
        return Err(ApiError::TooLarge { size: text.len(), limit });
    }
    Ok(())
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    check_size(&state, &req.text)?;
    let session = state.store.create(req.text);
    let doc = session.lock().doc.clone();
    if !doc.is_empty() {
        let neighborhood = session.engine.bootstrap(&doc)?;
        session.activate(&neighborhood);
    }
    let (version, scope, views) = session.active_views();
    tracing::info!(session = %session.id, paragraphs = doc.paragraphs().len(), "session created");
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: session.id.clone(),
            version,
            onboarding: doc.is_empty(),
            paragraphs: summarize(&doc),
            scope,
            views,
        }),
    ))
}

async fn get_document(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<DocumentState>, ApiError> {
    let session = session(&state, &id)?;
    let st = session.lock();
    Ok(Json(DocumentState {
        version: st.doc.version(),
        text: st.doc.text().to_string(),
        paragraphs: summarize(&st.doc),
    }))
}

async fn update_document(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<UpdateDocument>,
) -> Result<Json<DocumentUpdated>, ApiError> {
    check_size(&state, &req.text)?;
    let session = session(&state, &id)?;
    let (old, new) = {
        let mut st = session.lock();
        if st.doc.version() != req.base_version {
            return Err(ApiError::VersionConflict {
                current_version: st.doc.version(),
            });
        }
        let new = st.doc.with_text(req.text);
        let old = std::mem::replace(&mut st.doc, new.clone());
        (old, new)
    };
    let diff = diff_paragraphs(&old, &new);
    let invalidation = session.engine.invalidate(&diff.vanished_hashes(&old, &new));
    if old.is_empty() && !new.is_empty() {
        let neighborhood = session.engine.bootstrap(&new)?;
        session.activate(&neighborhood);
    }
    Ok(Json(DocumentUpdated {
        version: new.version(),
        changed: diff.changed,
        inserted: diff.inserted,
        deleted: diff.deleted,
        cancelled_views: invalidation.cancelled,
        paragraphs: summarize(&new),
    }))
}

async fn get_views(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ViewsSnapshot>, ApiError> {
    let session = session(&state, &id)?;
    let (version, scope, views) = session.active_views();
    Ok(Json(ViewsSnapshot { version, scope, views }))
}

async fn cursor_query(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(req): Query<CursorRequest>,
) -> Result<Response, ApiError> {
    set_cursor(state, id, req).await
}

async fn cursor_json(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<CursorRequest>,
) -> Result<Response, ApiError> {
    set_cursor(state, id, req).await
}

#[derive(Serialize)]
struct Superseded {
    cursor_seq: u64,
}

async fn set_cursor(state: AppState, id: String, req: CursorRequest) -> Result<Response, ApiError> {
    let session = session(&state, &id)?;
    let seq = {
        let mut st = session.lock();
        st.doc.snap(req.offset)?;
        st.cursor_seq += 1;
        st.cursor_seq
    };

    if !state.config.debounce.is_zero() {
        tokio::time::sleep(state.config.debounce).await;
    }

    let (doc, template) = {
        let st = session.lock();
        if st.cursor_seq != seq {
            return Ok(single_event("superseded", &Superseded { cursor_seq: st.cursor_seq }));
        }
        let template = match st.prompts.require(&req.prompt_id) {
            Ok(t) => t.clone(),
            Err(e) => return Ok(single_event("error", &ApiError::from(e).body())),
        };
        (st.doc.clone(), template)
    };
    let scope = match doc.snap(req.offset) {
        Ok(scope) => scope,
        Err(e) => return Ok(single_event("error", &ApiError::from(e).body())),
    };
    let neighborhood = session.engine.request_views(&scope, &template, &doc)?;
    session.activate(&neighborhood);

    let mut pending = Vec::new();
    let mut tails = Vec::new();
    for id in &neighborhood.priority {
        let Some(sub) = session.engine.subscribe(id) else {
            continue;
        };
        pending.push(view_event("view_pending", &session, &sub.snapshot));
        tails.push(follow(session.clone(), sub));
    }
    let events: EventStream = stream::iter(pending)
        .map(Ok)
        .chain(stream::select_all(tails))
        .boxed();
    Ok(Sse::new(events).keep_alive(KeepAlive::default()).into_response())
}

fn single_event(name: &'static str, payload: &impl Serialize) -> Response {
    let event = json_event(name, payload);
    Sse::new(stream::once(async move { Ok::<_, Infallible>(event) })).into_response()
}

fn json_event(name: &'static str, payload: &impl Serialize) -> Event {
    let data = serde_json::to_string(payload).expect("wire types serialize");
    Event::default().event(name).data(data)
}

fn view_event(name: &'static str, session: &Session, view: &marginalia_core::View) -> Event {
    let wire = {
        let st = session.lock();
        WireView::project(view, &st.doc)
    };
    json_event(name, &wire)
}

/// Deltas and the terminal event of one view. Dropping this stream only
/// unsubscribes; the generation itself keeps running.
fn follow(session: Arc<Session>, sub: ViewSubscription) -> EventStream {
    let ViewSubscription { snapshot, updates } = sub;
    let Some(rx) = updates else {
        let event = view_event(terminal_event_name(snapshot.status), &session, &snapshot);
        return stream::once(async move { Ok(event) }).boxed();
    };
    stream::unfold(Some((rx, session)), |state| async move {
        let (mut rx, session) = state?;
        match rx.recv().await? {
            ViewUpdate::Delta {
                view_id,
                chunk,
                display_text,
            } => {
                let event = json_event(
                    "view_delta",
                    &ViewDelta {
                        view_id,
                        delta: chunk,
                        display_text,
                    },
                );
                Some((Ok(event), Some((rx, session))))
            }
            ViewUpdate::Finished(view) => {
                let event = view_event(terminal_event_name(view.status), &session, &view);
                Some((Ok(event), None))
            }
        }
    })
    .boxed()
}

async fn list_prompts(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Vec<PromptTemplate>>, ApiError> {
    let session = session(&state, &id)?;
    let list = session.lock().prompts.list().to_vec();
    Ok(Json(list))
}

async fn get_prompt(
    State(state): State<AppState>,
    Path((id, prompt_id)): Path<(String, String)>,
) -> Result<Json<PromptTemplate>, ApiError> {
    let session = session(&state, &id)?;
    let template = session.lock().prompts.require(&prompt_id)?.clone();
    Ok(Json(template))
}

async fn create_prompt(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(draft): Json<PromptDraft>,
) -> Result<(StatusCode, Json<PromptTemplate>), ApiError> {
    let session = session(&state, &id)?;
    let created = session.lock().prompts.create(draft)?.clone();
    Ok((StatusCode::CREATED, Json(created)))
}

async fn edit_prompt(
    State(state): State<AppState>,
    Path((id, prompt_id)): Path<(String, String)>,
    Json(edit): Json<PromptEdit>,
) -> Result<Json<PromptTemplate>, ApiError> {
    let session = session(&state, &id)?;
    let edited = session.lock().prompts.edit_with(&prompt_id, edit)?.clone();
    Ok(Json(edited))
}

async fn export_prompts(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Vec<ExportedPrompt>>, ApiError> {
    let session = session(&state, &id)?;
    let exported = session.lock().prompts.export();
    Ok(Json(exported))
}

async fn import_prompts(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(entries): Json<Vec<ExportedPrompt>>,
) -> Result<Json<Vec<PromptTemplate>>, ApiError> {
    let session = session(&state, &id)?;
    let imported = PromptSet::import(entries)?;
    let list = imported.list().to_vec();
    session.lock().prompts = imported;
    Ok(Json(list))
}
