//! HTTP API over the authoring math and troubleshooting sessions.
//!
//! Models are stored copy-on-write; every session owns its compiled
//! network, so replacing a model never disturbs running sessions. Session
//! mutations carry the sequence number the client last saw and are
//! rejected with 409 when it is stale.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bats_core::compiler::{compile_model, CompileError};
use bats_core::elicitation::{
    collapse_cause_tree, complete_general, fit_probabilities, slider_update, CauseDistribution, ElicitationError,
    GeneralTable, SliderEdit, WishTable,
};
use bats_core::engine::{EngineError, Next, Session, SessionState};
use bats_core::model::{validate_model, CostWeights, ErrorConditionModel};
use bats_core::persistence::{load_model_document, save_model, PersistError, Strictness};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub profiles: BTreeMap<String, CostWeights>,
    pub default_profile: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let standard = bats_core::samples::standard_weights();
        Self {
            default_profile: standard.profile_name.clone(),
            profiles: BTreeMap::from([(standard.profile_name.clone(), standard)]),
        }
    }
}

struct SessionEntry {
    session: Session,
    seq: u64,
}

/// Shared state behind the router.
pub struct Store {
    config: ServiceConfig,
    models: RwLock<BTreeMap<String, Arc<ErrorConditionModel>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    next_session: AtomicU64,
}

impl Store {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            models: RwLock::default(),
            sessions: RwLock::default(),
            next_session: AtomicU64::new(1),
        })
    }

    /// Adds or replaces a model.
    pub fn put_model(&self, model: ErrorConditionModel) -> String {
        let id = model.id.clone();
        self.models.write().unwrap().insert(id.clone(), Arc::new(model));
        id
    }

    fn model(&self, id: &str) -> Result<Arc<ErrorConditionModel>, ApiError> {
        self.models
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownModel", format!("no model '{id}'")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownSession", format!("no session '{id}'")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    fn not_found(code: &str, message: String) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<ElicitationError> for ApiError {
    fn from(e: ElicitationError) -> Self {
        let status = match e {
            ElicitationError::InfeasibleAdjustment { .. }
            | ElicitationError::InfeasibleShortcut(..)
            | ElicitationError::InconsistentElicitation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<CompileError> for ApiError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::CompileBlocked(report) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({ "error": "CompileBlocked", "message": "model has validation errors", "report": report }),
            },
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/models", post(create_model).get(list_models))
        .route("/api/models/{id}", get(get_model))
        .route("/api/models/{id}/validate", post(validate))
        .route("/api/models/{id}/questions/{qid}/fit", post(fit))
        .route("/api/models/{id}/questions/{qid}/slider", post(slider))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/outcome", post(outcome))
        .route("/api/sessions/{id}/undo", post(undo))
        .with_state(store)
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: &str, store: Arc<Store>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, store).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, store: Arc<Store>) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_model(State(store): State<Arc<Store>>, body: String) -> ApiResult<Json<Value>> {
    let model = load_model_document(&body, Strictness::Strict)
        .map_err(|e| match e {
            PersistError::InvariantViolation(report) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({ "error": "InvariantViolation", "message": "model has validation errors", "report": report }),
            },
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        })?
        .value;
    let id = store.put_model(model);
    Ok(Json(json!({ "model_id": id })))
}

async fn list_models(State(store): State<Arc<Store>>) -> Json<Value> {
    let models = store.models.read().unwrap();
    let list: Vec<Value> = models.values().map(|m| json!({ "id": m.id, "name": m.name })).collect();
    Json(Value::Array(list))
}

async fn get_model(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Response> {
    let model = store.model(&id)?;
    Ok(([("content-type", "application/json")], save_model(&model)).into_response())
}

async fn validate(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let model = store.model(&id)?;
    Ok(Json(serde_json::to_value(validate_model(&model)).unwrap()))
}

fn question_table(model: &ErrorConditionModel, qid: &str) -> ApiResult<(GeneralTable, CauseDistribution)> {
    let q = model
        .question(qid)
        .ok_or_else(|| ApiError::not_found("UnknownQuestion", format!("no question '{qid}'")))?;
    let prior = collapse_cause_tree(&model.cause_tree)?;
    Ok((complete_general(q, &prior)?, prior))
}

fn store_table(store: &Store, model: &ErrorConditionModel, qid: &str, table: &GeneralTable) {
    let mut updated = model.clone();
    if let Some(q) = updated.question_mut(qid) {
        q.kind = table.to_question_kind();
    }
    store.put_model(updated);
}

async fn fit(
    State(store): State<Arc<Store>>,
    Path((id, qid)): Path<(String, String)>,
    Json(wishes): Json<WishTable>,
) -> ApiResult<Json<Value>> {
    let model = store.model(&id)?;
    let (table, prior) = question_table(&model, &qid)?;
    let (fitted, report) = fit_probabilities(&table, &wishes, &prior)?;
    store_table(&store, &model, &qid, &fitted);
    Ok(Json(json!({ "table": fitted, "fit_report": report })))
}

async fn slider(
    State(store): State<Arc<Store>>,
    Path((id, qid)): Path<(String, String)>,
    Json(edit): Json<SliderEdit>,
) -> ApiResult<Json<Value>> {
    let model = store.model(&id)?;
    let (table, prior) = question_table(&model, &qid)?;
    let (updated, changes) = slider_update(&table, &prior, &edit)?;
    if !changes.is_empty() {
        store_table(&store, &model, &qid, &updated);
    }
    Ok(Json(json!({ "changed_cells": changes, "table": updated })))
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    model_id: String,
    #[serde(default)]
    profile: Option<String>,
}

#[derive(Debug, Deserialize)]
struct OutcomeRequest {
    seq: u64,
    step_id: String,
    outcome: String,
}

#[derive(Debug, Deserialize)]
struct UndoRequest {
    seq: u64,
}

/// What every session endpoint returns.
#[derive(Debug, Serialize)]
struct SessionView {
    session_id: String,
    seq: u64,
    status: bats_core::engine::SessionStatus,
    posterior: bats_core::elicitation::CauseDistribution,
    recommendation: Next,
    state: SessionState,
}

fn view(id: &str, entry: &SessionEntry) -> ApiResult<SessionView> {
    Ok(SessionView {
        session_id: id.to_string(),
        seq: entry.seq,
        status: entry.session.status().clone(),
        posterior: entry.session.posterior()?,
        recommendation: entry.session.next_step()?,
        state: entry.session.state().clone(),
    })
}

async fn create_session(
    State(store): State<Arc<Store>>,
    Json(req): Json<CreateSession>,
) -> ApiResult<Json<SessionView>> {
    let model = store.model(&req.model_id)?;
    let profile = req.profile.unwrap_or_else(|| store.config.default_profile.clone());
    let weights = store.config.profiles.get(&profile).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "UnknownProfile",
            format!("no profile '{profile}'"),
        )
    })?;
    let network = Arc::new(compile_model(&model, weights)?);
    let id = format!("s{}", store.next_session.fetch_add(1, Ordering::Relaxed));
    let entry = SessionEntry {
        session: Session::new(network),
        seq: 0,
    };
    let out = view(&id, &entry)?;
    store.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(entry)));
    Ok(Json(out))
}

async fn get_session(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let entry = store.session(&id)?;
    let entry = entry.lock().unwrap();
    Ok(Json(view(&id, &entry)?))
}

fn check_seq(entry: &SessionEntry, seq: u64) -> ApiResult<()> {
    if entry.seq != seq {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "StaleSequence",
            format!("session is at seq {}, request carried {seq}", entry.seq),
        ));
    }
    Ok(())
}

async fn outcome(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Json(req): Json<OutcomeRequest>,
) -> ApiResult<Json<SessionView>> {
    let entry = store.session(&id)?;
    let mut entry = entry.lock().unwrap();
    check_seq(&entry, req.seq)?;
    let recommended = match entry.session.next_step() {
        Ok(Next::Recommend(r)) => Some(r.step_id),
        _ => None,
    };
    entry.session.record(&req.step_id, &req.outcome, recommended)?;
    if let Err(e) = entry.session.posterior() {
        entry.session.undo_last().expect("an outcome was just recorded");
        return Err(e.into());
    }
    entry.seq += 1;
    Ok(Json(view(&id, &entry)?))
}

async fn undo(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Json(req): Json<UndoRequest>,
) -> ApiResult<Json<SessionView>> {
    let entry = store.session(&id)?;
    let mut entry = entry.lock().unwrap();
    check_seq(&entry, req.seq)?;
    entry.session.undo_last()?;
    entry.seq += 1;
    Ok(Json(view(&id, &entry)?))
}
