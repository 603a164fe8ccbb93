//! HTTP session service: each session holds a precomputed trap model for one
//! configuration and answers power updates against it.
//!
//! Potential arrays travel as base64 strings of little-endian `f64` values in
//! mK, sheet by sheet, in the grid's x-major order.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use evatrap::config::{Simulation, SimulationDocument};
use evatrap::engine::Decomposition;
use evatrap::{trap_properties, ErrorKind, TrapModel, TrapOptions, TrapProperties, TrapResult};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory against which relative field folders are resolved.
    pub base_dir: PathBuf,
    /// Static front-end assets served under `/ui`.
    pub ui_dir: PathBuf,
    pub idle_timeout: Duration,
    pub threads: Option<usize>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            base_dir: PathBuf::from("."),
            ui_dir: PathBuf::from("ui/dist"),
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            threads: None,
        }
    }
}

struct Session {
    sim: Simulation,
    model: TrapModel,
    powers: Vec<f64>,
}

#[derive(Clone)]
struct Handle {
    session: Arc<tokio::sync::Mutex<Session>>,
    touched: Arc<Mutex<Instant>>,
}

impl Handle {
    fn touch(&self) {
        *self.touched.lock().unwrap() = Instant::now();
    }
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    sessions: Arc<Mutex<HashMap<String, Handle>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            config: Arc::new(config),
            sessions: Arc::default(),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn handle(&self, id: &str) -> Result<Handle, ApiError> {
        let handle = self
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session '{id}'")))?;
        handle.touch();
        Ok(handle)
    }

    /// Drops sessions idle for longer than the configured timeout. Sessions
    /// with a request in flight are kept.
    pub fn expire_idle(&self) -> usize {
        let timeout = self.config.idle_timeout;
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, h| h.touched.lock().unwrap().elapsed() < timeout || h.session.try_lock().is_err());
        before - sessions.len()
    }
}

/// Periodically expires idle sessions.
pub fn spawn_reaper(state: AppState) -> tokio::task::JoinHandle<()> {
    let period = (state.config.idle_timeout / 4).clamp(Duration::from_millis(10), Duration::from_secs(30));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = state.expire_idle();
            if n > 0 {
                log::info!("expired {n} idle session(s)");
            }
        }
    })
}

pub fn router(state: AppState) -> Router {
    let ui = ServeDir::new(&state.config.ui_dir).append_index_html_on_directories(true);
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/powers", post(update_powers))
        .route("/sessions/{id}/decomposition", get(decomposition))
        .nest_service("/ui", ui)
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<evatrap::Error> for ApiError {
    fn from(e: evatrap::Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Config => StatusCode::BAD_REQUEST,
            ErrorKind::Physics | ErrorKind::Io => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

#[derive(Serialize)]
struct SliderInfo {
    name: String,
    #[serde(rename = "default_W")]
    default_w: f64,
    #[serde(rename = "max_W")]
    max_w: f64,
}

fn metadata(id: &str, s: &Session) -> Value {
    let axes = s.model.axes();
    let trap = s.sim.trap();
    json!({
        "id": id,
        "hash": s.sim.hash(),
        "axes": {"x": axes.x, "y": axes.y, "z": axes.z},
        "shape": axes.shape(),
        "levels": s.sim.levels.iter().map(|l| json!({
            "state": l,
            "label": l.to_string(),
            "sheets": l.f.multiplicity(),
        })).collect::<Vec<_>>(),
        "sliders": s.sim.sliders.iter().map(|sl| SliderInfo {
            name: sl.name.clone(),
            default_w: sl.default_w,
            max_w: sl.max_w,
        }).collect::<Vec<_>>(),
        "powers_W": s.powers,
        "trap": {"axis": trap.axis.name(), "level": trap.level, "sheet": trap.sheet},
    })
}

async fn create_session(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let doc: SimulationDocument =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid configuration: {e}")))?;
    let config = state.config.clone();
    let session = tokio::task::spawn_blocking(move || -> Result<Session, ApiError> {
        let sim = Simulation::from_document(doc, &config.base_dir)?;
        let model = sim.model(TrapOptions {
            threads: config.threads,
            ..TrapOptions::default()
        })?;
        let powers = sim.sliders.iter().map(|s| s.default_w).collect();
        Ok(Session { sim, model, powers })
    })
    .await
    .map_err(internal)??;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let body = metadata(&id, &session);
    let handle = Handle {
        session: Arc::new(tokio::sync::Mutex::new(session)),
        touched: Arc::new(Mutex::new(Instant::now())),
    };
    state.sessions.lock().unwrap().insert(id, handle);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let handle = state.handle(&id)?;
    let session = handle.session.lock().await;
    Ok(Json(metadata(&id, &session)))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> StatusCode {
    match state.sessions.lock().unwrap().remove(&id) {
        Some(_) => StatusCode::NO_CONTENT,
        None => StatusCode::NOT_FOUND,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowersRequest {
    /// One value per slider, W.
    #[serde(rename = "powers_W")]
    pub powers_w: Vec<f64>,
}

pub fn encode_f64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    BASE64.encode(bytes)
}

pub fn decode_f64(text: &str) -> Option<Vec<f64>> {
    let bytes = BASE64.decode(text).ok()?;
    if bytes.len() % 8 != 0 {
        return None;
    }
    Some(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn decomposition_json(d: &Decomposition) -> Value {
    json!({
        "amplitudes": d.amplitudes.iter().map(|(m, w)| json!({"m": m.value(), "weight": w})).collect::<Vec<_>>(),
        "degenerate": d.degenerate,
    })
}

fn potentials_payload(s: &Session, member_powers: &[f64], result: &TrapResult) -> Result<Value, ApiError> {
    let axis = s.sim.trap().axis;
    let mut levels = Vec::new();
    for (k, level) in result.levels.iter().enumerate() {
        let mut sheets = Vec::new();
        let mut properties: Vec<TrapProperties> = Vec::new();
        let mut decompositions = Vec::new();
        for sheet in 0..level.dim() {
            sheets.push(encode_f64(&level.sheet_mk(sheet)));
            let p = trap_properties(result, k, sheet, axis, result.mass)?;
            let d = match p.grid_index {
                Some(point) if p.stable => {
                    decomposition_json(&s.model.decomposition(k, point, sheet, member_powers)?)
                }
                _ => Value::Null,
            };
            properties.push(p);
            decompositions.push(d);
        }
        levels.push(json!({
            "state": level.state,
            "label": level.state.to_string(),
            "potentials_mK": sheets,
            "properties": properties,
            "decomposition": decompositions,
        }));
    }
    let mask: Vec<u8> = result.mask.iter().map(|&m| m as u8).collect();
    Ok(json!({
        "powers_W": s.powers,
        "member_powers_W": member_powers,
        "shape": result.axes.shape(),
        "mask": BASE64.encode(mask),
        "levels": levels,
    }))
}

async fn update_powers(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> Result<Json<Value>, ApiError> {
    let handle = state.handle(&id)?;
    let request: PowersRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid power update: {e}")))?;
    // requests to one session run one at a time, in arrival order
    let mut session = handle.session.clone().lock_owned().await;
    let payload = tokio::task::spawn_blocking(move || -> Result<Value, ApiError> {
        let member_powers = session.sim.member_powers(&request.powers_w)?;
        let result = session.sim.evaluate(&session.model, &member_powers)?;
        session.powers = request.powers_w;
        potentials_payload(&session, &member_powers, &result)
    })
    .await
    .map_err(internal)??;
    handle.touch();
    Ok(Json(payload))
}

#[derive(Deserialize)]
pub struct DecompositionQuery {
    pub point: usize,
    pub sheet: usize,
    #[serde(default)]
    pub level: Option<usize>,
}

async fn decomposition(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<DecompositionQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let handle = state.handle(&id)?;
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let session = handle.session.clone().lock_owned().await;
    let value = tokio::task::spawn_blocking(move || -> Result<Value, ApiError> {
        let level = q.level.unwrap_or(session.sim.trap().level);
        let member_powers = session.sim.member_powers(&session.powers)?;
        let d = session.model.decomposition(level, q.point, q.sheet, &member_powers)?;
        let mut v = decomposition_json(&d);
        v["point"] = json!(q.point);
        v["sheet"] = json!(q.sheet);
        v["level"] = json!(level);
        v["position_m"] = json!(session.model.axes().coordinates(q.point));
        Ok(v)
    })
    .await
    .map_err(internal)??;
    Ok(Json(value))
}
