//! Session registry and the HTTP routes over it.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sbs_core::{AgentId, GridMap};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::config::{PlacementMode, SessionConfig};
use crate::engine::{Directive, Session, Snapshot};
use crate::error::{FieldError, Result};
use crate::events::{FieldReading, Fix};
use crate::store::{log_path, LogWriter};

const INDEX_HTML: &str = include_str!("ui/index.html");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(flatten)]
    pub config: SessionConfig,
    /// Reference map for per-reading metrics (analysis runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<GridMap<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub join_url: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinRequest {
    #[serde(default)]
    pub placement: Option<PlacementMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinResponse {
    pub agent_id: AgentId,
    pub directive: Directive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingRequest {
    #[serde(flatten)]
    pub reading: FieldReading,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectiveResponse {
    pub directive: Directive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directive: Option<Directive>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug)]
struct Entry {
    session: Session,
    writer: Option<LogWriter>,
}

impl Entry {
    fn persist(&mut self) -> Result<()> {
        match &mut self.writer {
            Some(w) => w.sync(self.session.events()),
            None => Ok(()),
        }
    }
}

/// All live sessions. Each session is behind its own lock, so requests to
/// one session are applied one at a time in arrival order while separate
/// sessions proceed in parallel.
#[derive(Debug, Clone, Default)]
pub struct Coordinator {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Entry>>>>>,
    log_dir: Option<PathBuf>,
    public_url: String,
}

impl Coordinator {
    pub fn new(log_dir: Option<PathBuf>) -> Self {
        Self {
            log_dir,
            ..Self::default()
        }
    }

    /// Prefix for join URLs, e.g. `http://10.0.0.5:8080`.
    pub fn with_public_url(mut self, url: impl Into<String>) -> Self {
        self.public_url = url.into().trim_end_matches('/').to_string();
        self
    }

    fn entry(&self, sid: &str) -> Result<Arc<Mutex<Entry>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(sid)
            .cloned()
            .ok_or_else(|| FieldError::UnknownSession(sid.to_string()))
    }

    pub async fn create_session(&self, req: CreateSessionRequest) -> Result<CreateSessionResponse> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::create(id.clone(), req.config, req.truth, now_ms())?;
        let writer = match &self.log_dir {
            Some(dir) => Some(LogWriter::create(log_path(dir, &id))?),
            None => None,
        };
        let snap = session.snapshot();
        let mut entry = Entry { session, writer };
        entry.persist()?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id.clone(), Arc::new(Mutex::new(entry)));
        tracing::info!(session = %id, rows = snap.rows, cols = snap.cols, "session created");
        Ok(CreateSessionResponse {
            join_url: format!("{}/?session={id}", self.public_url),
            session_id: id,
            rows: snap.rows,
            cols: snap.cols,
        })
    }

    async fn with<T>(&self, sid: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let entry = self.entry(sid)?;
        let mut guard = entry.lock().await;
        let out = f(&mut guard.session);
        guard.persist()?;
        out
    }

    pub async fn join(&self, sid: &str, req: JoinRequest) -> Result<JoinResponse> {
        let (agent_id, directive) = self.with(sid, |s| s.join(req.placement, now_ms())).await?;
        Ok(JoinResponse { agent_id, directive })
    }

    pub async fn report_fix(&self, sid: &str, agent: AgentId, fix: Fix) -> Result<DirectiveResponse> {
        let directive = self.with(sid, |s| s.report_fix(agent, fix, now_ms())).await?;
        Ok(DirectiveResponse { directive })
    }

    pub async fn submit_reading(&self, sid: &str, agent: AgentId, req: ReadingRequest) -> Result<DirectiveResponse> {
        let directive = self
            .with(sid, |s| s.submit_reading(agent, req.reading, req.token, now_ms()))
            .await?;
        Ok(DirectiveResponse { directive })
    }

    pub async fn state(&self, sid: &str) -> Result<Snapshot> {
        self.with(sid, |s| Ok(s.snapshot())).await
    }

    /// Full copy of a session, for tests and export.
    pub async fn session(&self, sid: &str) -> Result<Session> {
        self.with(sid, |s| Ok(s.clone())).await
    }
}

/// HTTP status and JSON body reported for an error.
pub fn error_response(e: &FieldError) -> (StatusCode, ErrorBody) {
    let (status, code) = match e {
        FieldError::UnknownSession(_) | FieldError::UnknownAgent(_) => (StatusCode::NOT_FOUND, "not_found"),
        FieldError::Invalid(_) => (StatusCode::BAD_REQUEST, "invalid"),
        FieldError::OutOfField { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "out_of_field"),
        FieldError::Closed => (StatusCode::CONFLICT, "closed"),
        FieldError::TokenConflict(_) => (StatusCode::CONFLICT, "token_conflict"),
        FieldError::Core(_) | FieldError::Corrupt(_) | FieldError::Io { .. } => {
            (StatusCode::INTERNAL_SERVER_ERROR, "internal")
        }
    };
    let directive = match e {
        FieldError::OutOfField { directive, .. } => directive.as_deref().cloned(),
        _ => None,
    };
    let body = ErrorBody {
        error: e.to_string(),
        code: code.into(),
        directive,
    };
    (status, body)
}

impl IntoResponse for FieldError {
    fn into_response(self) -> Response {
        let (status, body) = error_response(&self);
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        (status, Json(body)).into_response()
    }
}

fn parse<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| FieldError::Invalid(e.to_string()))
}

async fn create(State(c): State<Coordinator>, Json(req): Json<CreateSessionRequest>) -> Result<impl IntoResponse> {
    Ok((StatusCode::CREATED, Json(c.create_session(req).await?)))
}

async fn join(State(c): State<Coordinator>, Path(sid): Path<String>, body: Bytes) -> Result<Json<JoinResponse>> {
    Ok(Json(c.join(&sid, parse(&body)?).await?))
}

async fn fix(
    State(c): State<Coordinator>,
    Path((sid, aid)): Path<(String, u32)>,
    Json(fix): Json<Fix>,
) -> Result<Json<DirectiveResponse>> {
    Ok(Json(c.report_fix(&sid, AgentId(aid), fix).await?))
}

async fn reading(
    State(c): State<Coordinator>,
    Path((sid, aid)): Path<(String, u32)>,
    Json(req): Json<ReadingRequest>,
) -> Result<Json<DirectiveResponse>> {
    Ok(Json(c.submit_reading(&sid, AgentId(aid), req).await?))
}

async fn state(State(c): State<Coordinator>, Path(sid): Path<String>) -> Result<Json<Snapshot>> {
    Ok(Json(c.state(&sid).await?))
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

/// The API under `/api`, plus the operator UI at `/`: the bundle in
/// `ui_dir` when given, else a built-in placeholder page.
pub fn router(coordinator: Coordinator, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{sid}/agents", post(join))
        .route("/api/sessions/{sid}/agents/{aid}/fix", post(fix))
        .route("/api/sessions/{sid}/agents/{aid}/reading", post(reading))
        .route("/api/sessions/{sid}/state", get(state))
        .with_state(coordinator);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}
