//! HTTP service over a workspace, under `/v1`. Bodies are JSON only.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use mvl_core::chain_algebra::validate_conj;
use serde::Deserialize;
use serde_json::{json, Value as Json};

use crate::docs::{self, from_json, AlgebraDoc, SchemaError, SessionDoc};
use crate::views;
use crate::workspace::{Kind, Workspace, WorkspaceError};

#[derive(Debug)]
pub enum ApiError {
    Schema(SchemaError),
    NotFound(String),
    Conflict(String),
    UnsupportedMedia,
    Internal(String),
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        match e {
            WorkspaceError::Schema(s) => ApiError::Schema(s),
            WorkspaceError::NotFound(id) => ApiError::NotFound(id),
            WorkspaceError::Conflict(m) => ApiError::Conflict(m),
            WorkspaceError::Io(e) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<SchemaError> for ApiError {
    fn from(e: SchemaError) -> Self {
        ApiError::Schema(e)
    }
}

fn json_response(status: StatusCode, body: &Json) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], views::to_text(body)).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Schema(s) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": {"kind": "schema", "pointer": s.pointer, "message": s.message}}),
            ),
            ApiError::NotFound(id) => {
                (StatusCode::NOT_FOUND, json!({"error": {"kind": "not_found", "message": format!("no entity `{id}`")}}))
            }
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({"error": {"kind": "conflict", "message": m}})),
            ApiError::UnsupportedMedia => (
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                json!({"error": {"kind": "media_type", "message": "request bodies must be application/json"}}),
            ),
            ApiError::Internal(m) => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": {"kind": "internal", "message": m}}))
            }
        };
        json_response(status, &body)
    }
}

type ApiResult = Result<Response, ApiError>;
type Ws = Arc<Workspace>;

/// Parses a JSON body; a missing content type is accepted.
fn body(headers: &HeaderMap, bytes: &Bytes) -> Result<Json, ApiError> {
    if let Some(ct) = headers.get(header::CONTENT_TYPE) {
        let ct = ct.to_str().unwrap_or("");
        if !ct.starts_with("application/json") {
            return Err(ApiError::UnsupportedMedia);
        }
    }
    let text = std::str::from_utf8(bytes).map_err(|_| SchemaError::at("", "body is not UTF-8"))?;
    Ok(docs::parse_text(text)?)
}

/// Runs workspace work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

fn kind(collection: &str) -> Result<Kind, ApiError> {
    match Kind::from_plural(collection) {
        Some(k) if k.plural() == collection && k != Kind::Session => Ok(k),
        _ => Err(ApiError::NotFound(collection.to_string())),
    }
}

pub fn router(ws: Workspace) -> Router {
    let state: Ws = Arc::new(ws);
    Router::new()
        .route("/v1/validate", post(validate))
        .route("/v1/sessions", get(list_sessions).post(create_session))
        .route("/v1/sessions/{id}", get(session_state).delete(delete_entity_session))
        .route("/v1/sessions/{id}/candidates", get(candidates))
        .route("/v1/sessions/{id}/selection", post(select))
        .route("/v1/sessions/{id}/result", get(result))
        .route("/v1/algebras/{id}/intervals", get(intervals))
        .route("/v1/{collection}", get(list).post(create))
        .route("/v1/{collection}/{id}", get(fetch).delete(delete))
        .with_state(state)
}

pub async fn serve(ws: Workspace, host: &str, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(ws))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn items(ws: &Workspace, kind: Kind) -> Result<Json, ApiError> {
    let names = ws.names()?;
    let items: Vec<Json> = ws
        .list(kind)?
        .into_iter()
        .map(|id| {
            let name = names.iter().find(|(_, v)| **v == id).map(|(n, _)| n.clone());
            json!({"id": id, "name": name})
        })
        .collect();
    Ok(json!({ "items": items }))
}

async fn list(State(ws): State<Ws>, Path(collection): Path<String>) -> ApiResult {
    let k = kind(&collection)?;
    let j = blocking(move || items(&ws, k)).await?;
    Ok(json_response(StatusCode::OK, &j))
}

#[derive(Deserialize)]
struct NameQuery {
    name: Option<String>,
}

async fn create(
    State(ws): State<Ws>,
    Path(collection): Path<String>,
    Query(q): Query<NameQuery>,
    headers: HeaderMap,
    bytes: Bytes,
) -> ApiResult {
    let k = kind(&collection)?;
    let doc = body(&headers, &bytes)?;
    let (id, stored) = blocking(move || {
        let id = ws.add(k, &doc, q.name.as_deref(), None)?;
        let stored = ws.get(&id)?;
        Ok((id, stored))
    })
    .await?;
    Ok(json_response(StatusCode::CREATED, &json!({"id": id, "document": stored})))
}

fn check_kind(id: &str, k: Kind, ws: &Workspace) -> Result<String, ApiError> {
    let id = ws.lookup(id)?;
    if Kind::of_id(&id) != Some(k) {
        return Err(ApiError::NotFound(id));
    }
    Ok(id)
}

async fn fetch(State(ws): State<Ws>, Path((collection, id)): Path<(String, String)>) -> ApiResult {
    let k = kind(&collection)?;
    let j = blocking(move || {
        let id = check_kind(&id, k, &ws)?;
        Ok(ws.get(&id)?)
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}

async fn delete(State(ws): State<Ws>, Path((collection, id)): Path<(String, String)>) -> ApiResult {
    let k = kind(&collection)?;
    blocking(move || {
        let id = check_kind(&id, k, &ws)?;
        Ok(ws.delete(&id)?)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn delete_entity_session(State(ws): State<Ws>, Path(id): Path<String>) -> ApiResult {
    blocking(move || {
        let id = check_kind(&id, Kind::Session, &ws)?;
        Ok(ws.delete(&id)?)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn intervals(State(ws): State<Ws>, Path(id): Path<String>) -> ApiResult {
    let j = blocking(move || {
        let id = check_kind(&id, Kind::Algebra, &ws)?;
        let doc: AlgebraDoc = from_json(&ws.get(&id)?)?;
        Ok(views::intervals(&doc.algebra()?))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}

async fn validate(headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let doc: AlgebraDoc = from_json(&body(&headers, &bytes)?)?;
    let (chain, table) = doc.parts()?;
    let report = validate_conj(&chain, &table).map_err(|e| SchemaError::at("/conj", e.to_string()))?;
    Ok(json_response(StatusCode::OK, &json!({"valid": report.passes(), "violations": report.violations})))
}

async fn list_sessions(State(ws): State<Ws>) -> ApiResult {
    let j = blocking(move || items(&ws, Kind::Session)).await?;
    Ok(json_response(StatusCode::OK, &j))
}

async fn create_session(State(ws): State<Ws>, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let doc: SessionDoc = from_json(&body(&headers, &bytes)?)?;
    let j = blocking(move || {
        let (id, s) = ws.create_session(&doc, None)?;
        Ok(views::session_state(&id, &s))
    })
    .await?;
    Ok(json_response(StatusCode::CREATED, &j))
}

async fn session_state(State(ws): State<Ws>, Path(id): Path<String>) -> ApiResult {
    let j = blocking(move || {
        let id = check_kind(&id, Kind::Session, &ws)?;
        Ok(views::session_state(&id, &ws.session(&id)?))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    offset: usize,
    #[serde(default = "default_limit")]
    limit: usize,
}

fn default_limit() -> usize {
    20
}

async fn candidates(State(ws): State<Ws>, Path(id): Path<String>, Query(q): Query<PageQuery>) -> ApiResult {
    let j = blocking(move || {
        let id = check_kind(&id, Kind::Session, &ws)?;
        Ok(views::page(&ws.session(&id)?.page(q.offset, q.limit)))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionDoc {
    /// A candidate id, or null to decline every candidate.
    candidate: Option<usize>,
}

async fn select(State(ws): State<Ws>, Path(id): Path<String>, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let sel: SelectionDoc = from_json(&body(&headers, &bytes)?)?;
    let j = blocking(move || {
        let id = check_kind(&id, Kind::Session, &ws)?;
        let s = ws.select(&id, sel.candidate)?;
        Ok(views::session_state(&id, &s))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}

async fn result(State(ws): State<Ws>, Path(id): Path<String>) -> ApiResult {
    let j = blocking(move || {
        let id = check_kind(&id, Kind::Session, &ws)?;
        let s = ws.session(&id)?;
        views::session_result(&s)
            .ok_or_else(|| ApiError::Conflict(format!("session is still open in phase {}", s.phase.name())))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &j))
}
