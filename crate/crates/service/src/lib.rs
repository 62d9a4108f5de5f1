//! Session-oriented HTTP service for interactive planning.
//!
//! A session owns a sampled roadmap. Plans, path queries, selection and
//! replans with new threats all reuse it; only edge costs are recomputed.

pub mod api;
mod error;
pub mod persist;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use paretoplan_core::geometry::encode_pgm;
use paretoplan_core::roadmap::RoadmapDoc;
use serde::de::DeserializeOwned;
use tower_http::services::ServeDir;

pub use error::ApiError;

use api::{
    CreateSession, FrontSummary, PathResponse, PlanRequest, PlanState, ReplanRequest,
    SelectRequest, SelectResponse, SessionCreated, SessionInfo, StatusResponse,
};
use session::{PlanResult, Session, SessionSlot, Workspace};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Decoded map size limit.
    pub max_map_bytes: usize,
    pub max_cells: usize,
    pub max_nodes: usize,
    /// Wall-clock limit of a plan unless the request sets its own.
    pub plan_timeout: Duration,
    /// Directory served for paths outside the API.
    pub static_dir: Option<PathBuf>,
    /// Session snapshots for restart recovery.
    pub persist_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_map_bytes: 16 << 20,
            max_cells: 16 << 20,
            max_nodes: 100_000,
            plan_timeout: Duration::from_secs(30),
            static_dir: None,
            persist_dir: None,
        }
    }
}

impl ServiceConfig {
    /// Request bodies carry the map base64 encoded, plus the other fields.
    fn max_body_bytes(&self) -> usize {
        self.max_map_bytes / 3 * 4 + (1 << 20)
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub config: Arc<ServiceConfig>,
    sessions: Arc<RwLock<HashMap<String, Arc<SessionSlot>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config: Arc::new(config),
            sessions: Arc::default(),
        }
    }

    /// Loads persisted sessions and recomputes their last plans. Returns the
    /// state and the reasons any snapshot could not be loaded.
    pub fn restore(config: ServiceConfig) -> (Self, Vec<String>) {
        let state = Self::new(config);
        let Some(root) = state.config.persist_dir.clone() else {
            return (state, Vec::new());
        };
        let (restored, mut failed) = persist::load_all(&root);
        for r in restored {
            let mut s = Session::new(r.manifest.id.clone(), r.workspace);
            if let Some(req) = &r.manifest.last_plan {
                match s.workspace.plan(req, state.config.plan_timeout, 1, &s.id) {
                    Ok(result) => {
                        s.plans_completed = 1;
                        s.state = PlanState::Done;
                        s.selected = r.manifest.selected.filter(|&k| k < result.paths.len());
                        s.latest = Some(result);
                    }
                    Err(e) => failed.push(format!("{}: replaying last plan: {}", s.id, e.message)),
                }
            }
            state.insert(s);
        }
        (state, failed)
    }

    fn insert(&self, s: Session) {
        let id = s.id.clone();
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, SessionSlot::new(s));
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionSlot>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.session(id)
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    fn persist_manifest(&self, s: &Session) {
        if let Some(root) = &self.config.persist_dir {
            if let Err(e) = persist::save_manifest(root, s) {
                eprintln!("session {}: persisting failed: {e}", s.id);
            }
        }
    }
}

/// JSON body whose parse errors are 400 rather than axum's 422.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = Response;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e: BytesRejection| {
                ApiError::new(e.status(), e.body_text()).into_response()
            })?;
        let body = if bytes.is_empty() {
            &b"{}"[..]
        } else {
            &bytes[..]
        };
        serde_json::from_slice(body).map(JsonBody).map_err(|e| {
            ApiError::bad_request(format!("malformed request body: {e}")).into_response()
        })
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/status", get(get_status))
        .route("/sessions/{id}/plan", post(plan_session))
        .route("/sessions/{id}/replan", post(replan_session))
        .route("/sessions/{id}/paths/{k}", get(get_path))
        .route("/sessions/{id}/select", post(select_path))
        .route("/sessions/{id}/roadmap", get(get_roadmap))
        .route("/sessions/{id}/map", get(get_map))
        .layer(DefaultBodyLimit::max(state.config.max_body_bytes()));
    let api = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("planner task failed: {e}")))?
}

async fn create_session(
    State(st): State<AppState>,
    JsonBody(req): JsonBody<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let cfg = st.config.clone();
    let workspace = blocking(move || Workspace::create(&req, &cfg)).await?;
    let id = uuid::Uuid::new_v4().to_string();
    let rm = workspace.roadmap();
    let created = SessionCreated {
        id: id.clone(),
        roadmap_hash: rm.content_hash(),
        nodes: rm.node_count(),
        edges: rm.edges().len(),
        source: rm.source(),
        goal_node: workspace.params.goal.map(|_| rm.goal()),
    };
    let session = Session::new(id, workspace);
    if let Some(root) = &st.config.persist_dir {
        persist::save_payload(root, &session).map_err(ApiError::internal)?;
    }
    st.insert(session);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list_sessions(State(st): State<AppState>) -> Json<Vec<String>> {
    Json(st.session_ids())
}

async fn get_session(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    Ok(Json(st.slot(&id)?.lock().info()))
}

async fn get_status(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<StatusResponse>, ApiError> {
    Ok(Json(st.slot(&id)?.lock().status()))
}

/// Runs one plan on `workspace` while the caller holds the session's busy
/// flag, then publishes the result. `replace` swaps in a new workspace on
/// success.
async fn run_plan(
    st: &AppState,
    slot: &Arc<SessionSlot>,
    workspace: Workspace,
    req: PlanRequest,
    replace: bool,
) -> Result<FrontSummary, ApiError> {
    let (id, seq) = {
        let mut s = slot.lock();
        s.state = PlanState::Planning;
        s.started = Some(Instant::now());
        (s.id.clone(), s.plans_completed + 1)
    };
    let timeout = st.config.plan_timeout;
    let ws = workspace.clone();
    let outcome = blocking(move || ws.plan(&req, timeout, seq, &id)).await;

    let mut s = slot.lock();
    s.started = None;
    match outcome {
        Ok(result) => {
            let summary = result.summary.clone();
            publish(&mut s, result);
            if replace {
                s.workspace = workspace;
            }
            st.persist_manifest(&s);
            Ok(summary)
        }
        Err(e) => {
            s.state = PlanState::Failed;
            s.last_error = Some(e.message.clone());
            Err(e)
        }
    }
}

fn publish(s: &mut Session, result: PlanResult) {
    s.latest = Some(result);
    s.selected = None;
    s.plans_completed += 1;
    s.state = PlanState::Done;
    s.last_error = None;
}

fn busy(id: &str) -> ApiError {
    ApiError::conflict(format!("session {id} is busy with another request"))
}

async fn plan_session(
    State(st): State<AppState>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<PlanRequest>,
) -> Result<Json<FrontSummary>, ApiError> {
    let slot = st.slot(&id)?;
    let _guard = slot.try_begin().ok_or_else(|| busy(&id))?;
    let workspace = slot.lock().workspace.clone();
    Ok(Json(run_plan(&st, &slot, workspace, req, false).await?))
}

async fn replan_session(
    State(st): State<AppState>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<ReplanRequest>,
) -> Result<Json<FrontSummary>, ApiError> {
    let slot = st.slot(&id)?;
    let _guard = slot.try_begin().ok_or_else(|| busy(&id))?;
    let (current, base) = {
        let s = slot.lock();
        (
            s.workspace.clone(),
            s.latest
                .as_ref()
                .map(|r| r.request.clone())
                .unwrap_or_default(),
        )
    };
    let plan_req = req.plan_overrides().merged_over(&base);
    let workspace = match req.threats {
        Some(threats) => blocking(move || current.with_threats(threats)).await?,
        None => current,
    };
    Ok(Json(run_plan(&st, &slot, workspace, plan_req, true).await?))
}

async fn get_path(
    State(st): State<AppState>,
    Path((id, k)): Path<(String, usize)>,
) -> Result<Json<PathResponse>, ApiError> {
    let slot = st.slot(&id)?;
    let s = slot.lock();
    let latest = s
        .latest
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no plan has completed in this session"))?;
    let path = latest.paths.get(k).ok_or_else(|| {
        ApiError::not_found(format!("no path {k}; the front has {}", latest.paths.len()))
    })?;
    Ok(Json(PathResponse {
        path: path.clone(),
        selected: s.selected == Some(k),
    }))
}

async fn select_path(
    State(st): State<AppState>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<SelectRequest>,
) -> Result<Json<SelectResponse>, ApiError> {
    let slot = st.slot(&id)?;
    let _guard = slot.try_begin().ok_or_else(|| busy(&id))?;
    let mut s = slot.lock();
    let path = s
        .latest
        .as_ref()
        .and_then(|r| r.paths.get(req.k))
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no path {}", req.k)))?;
    s.selected = Some(req.k);
    st.persist_manifest(&s);
    Ok(Json(SelectResponse {
        selected: req.k,
        budget: path.budget,
        primary: path.primary,
        secondary: path.secondary,
    }))
}

async fn get_roadmap(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<RoadmapDoc>, ApiError> {
    Ok(Json(st.slot(&id)?.lock().workspace.roadmap().to_doc()))
}

async fn get_map(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = st.slot(&id)?;
    let grid = slot
        .lock()
        .workspace
        .grid
        .clone()
        .ok_or_else(|| ApiError::not_found("session was created from a graph, not a map"))?;
    Ok((
        [(header::CONTENT_TYPE, "image/x-portable-graymap")],
        encode_pgm(&grid),
    )
        .into_response())
}
