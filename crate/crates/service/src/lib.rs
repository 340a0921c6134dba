//! HTTP front end for autocompletion sessions.
//!
//! Rankings for a patient are computed once, when the session is created.
//! Every later request only runs scope detection and prefix filtering over
//! the cached lists. Requests for one session are serialized through its
//! mutex; distinct sessions proceed in parallel.

pub mod wire;

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Instant, SystemTime};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use thiserror::Error;
use tokio::sync::Mutex;

use scribe_core::engine::Engine;
use scribe_core::extraction::{NegationLexicon, RetroMatcher};
use scribe_core::features::{FeatureError, PatientContext};
use scribe_core::ontology::Ontology;
use scribe_core::session::{
    CachedRankings, ExportedNote, NoteSection, Session, SessionError, TriggerLexicon, DEFAULT_K,
};

use wire::*;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("malformed patient context: {0}")]
    BadContext(#[from] FeatureError),
    #[error("{0}")]
    BadSection(String),
    #[error("unknown entry {0:?}")]
    UnknownEntry(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Session(SessionError::Stale | SessionError::NothingShown)
            | ServiceError::Session(SessionError::Overlap { .. } | SessionError::NotACandidate { .. }) => {
                StatusCode::CONFLICT
            }
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

/// One patient's note session.
pub struct SessionHandle {
    pub session: Session,
    pub context: PatientContext,
    pub created: SystemTime,
    /// Log records already appended to the event file.
    persisted: usize,
}

/// Immutable models plus the live sessions.
pub struct AppState {
    ontology: Arc<Ontology>,
    engine: Engine,
    triggers: Arc<TriggerLexicon>,
    negation: NegationLexicon,
    retro: RetroMatcher,
    k: usize,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionHandle>>>>,
    serial: AtomicU64,
    salt: u64,
    demo_patients: Vec<PatientContext>,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(engine: Engine, triggers: TriggerLexicon, negation: NegationLexicon) -> Self {
        let ontology = engine.ontology().clone();
        let retro = RetroMatcher::new(&ontology);
        Self {
            ontology,
            engine,
            triggers: Arc::new(triggers),
            negation,
            retro,
            k: DEFAULT_K,
            sessions: RwLock::new(HashMap::new()),
            serial: AtomicU64::new(0),
            salt: rand::random(),
            demo_patients: Vec::new(),
            log_dir: None,
        }
    }

    /// Patients listed by `GET /v1/demo/patients`.
    pub fn with_demo_patients(mut self, patients: Vec<PatientContext>) -> Self {
        self.demo_patients = patients;
        self
    }

    /// Appends each session's events to `<dir>/<session_id>.jsonl`.
    pub fn with_log_dir(mut self, dir: PathBuf) -> Self {
        self.log_dir = Some(dir);
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    /// Runs the four rankers for `context` and registers a session.
    pub fn create_session(&self, context: PatientContext) -> Result<String, ServiceError> {
        context.validate(&self.ontology)?;
        let rankings = CachedRankings::new(&self.ontology, self.engine.rank_all(&context));
        let session = Session::new(self.ontology.clone(), self.triggers.clone(), rankings, self.k);
        let n = self.serial.fetch_add(1, Ordering::Relaxed);
        let id = format!("{:016x}{n:08x}", self.salt);
        let handle = SessionHandle { session, context, created: SystemTime::now(), persisted: 0 };
        self.sessions.write().expect("session map poisoned").insert(id.clone(), Arc::new(Mutex::new(handle)));
        log::debug!("session {id} created");
        Ok(id)
    }

    pub fn handle(&self, id: &str) -> Result<Arc<Mutex<SessionHandle>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub async fn suggest(&self, id: &str, req: SuggestRequest) -> Result<SuggestResponse, ServiceError> {
        let section = match req.section.as_deref() {
            None | Some("") => None,
            Some(s) => Some(s.parse::<NoteSection>().map_err(ServiceError::BadSection)?),
        };
        let handle = self.handle(id)?;
        let mut h = handle.lock().await;
        let t0 = Instant::now();
        let result = h.session.query(&req.text, req.cursor, section)?;
        let processing_us = t0.elapsed().as_micros() as u64;
        let out = SuggestResponse {
            active: result.scope.state.active,
            type_order: result.scope.state.type_order,
            suggestions: result.suggestions.iter().map(|s| WireSuggestion::new(s, &self.ontology)).collect(),
            processing_us,
        };
        self.persist(id, &mut h);
        Ok(out)
    }

    pub async fn accept(&self, id: &str, req: AcceptRequest) -> Result<NoteView, ServiceError> {
        let expect = req.entry.as_deref().map(|e| self.entry(e)).transpose()?;
        let handle = self.handle(id)?;
        let mut h = handle.lock().await;
        h.session.accept(req.index, expect)?;
        self.persist(id, &mut h);
        Ok(self.view(&h))
    }

    pub async fn retro(&self, id: &str, req: RetroRequest) -> Result<NoteView, ServiceError> {
        let entry = self.entry(&req.entry)?;
        let handle = self.handle(id)?;
        let mut h = handle.lock().await;
        h.session.retro_confirm(&self.retro, req.start, req.end, entry)?;
        self.persist(id, &mut h);
        Ok(self.view(&h))
    }

    pub async fn note_view(&self, id: &str) -> Result<NoteView, ServiceError> {
        let handle = self.handle(id)?;
        let h = handle.lock().await;
        Ok(self.view(&h))
    }

    pub async fn export(&self, id: &str) -> Result<ExportedNote, ServiceError> {
        let handle = self.handle(id)?;
        let h = handle.lock().await;
        Ok(h.session.export(&self.negation))
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            engine: self.engine.name().to_string(),
            entries: self.ontology.len(),
            synonyms: self.ontology.synonym_count(),
            sessions: self.session_count(),
            ranker_invocations: self.engine.invocations(),
        }
    }

    fn entry(&self, id: &str) -> Result<scribe_core::ontology::EntryIdx, ServiceError> {
        self.ontology.find(id).ok_or_else(|| ServiceError::UnknownEntry(id.to_string()))
    }

    fn view(&self, h: &SessionHandle) -> NoteView {
        NoteView::new(h.session.note(), &h.session.retro_candidates(&self.retro), &self.ontology)
    }

    /// Best effort: a failed write is logged and retried with the next request.
    fn persist(&self, id: &str, h: &mut SessionHandle) {
        let Some(dir) = &self.log_dir else { return };
        let records = &h.session.log().records()[h.persisted..];
        if records.is_empty() {
            return;
        }
        let path = dir.join(format!("{id}.jsonl"));
        let written = std::fs::OpenOptions::new().create(true).append(true).open(&path).and_then(|mut f| {
            let mut buf = Vec::new();
            for r in records {
                serde_json::to_writer(&mut buf, r).map_err(std::io::Error::other)?;
                buf.push(b'\n');
            }
            f.write_all(&buf)
        });
        match written {
            Ok(()) => h.persisted += records.len(),
            Err(e) => log::warn!("{}: {e}", path.display()),
        }
    }
}

type Shared = State<Arc<AppState>>;

async fn create(State(s): Shared, Json(context): Json<PatientContext>) -> Result<Json<CreatedSession>, ServiceError> {
    Ok(Json(CreatedSession { session_id: s.create_session(context)? }))
}

async fn suggest(
    State(s): Shared,
    Path(id): Path<String>,
    Json(req): Json<SuggestRequest>,
) -> Result<Json<SuggestResponse>, ServiceError> {
    Ok(Json(s.suggest(&id, req).await?))
}

async fn accept(
    State(s): Shared,
    Path(id): Path<String>,
    Json(req): Json<AcceptRequest>,
) -> Result<Json<NoteView>, ServiceError> {
    Ok(Json(s.accept(&id, req).await?))
}

async fn retro(
    State(s): Shared,
    Path(id): Path<String>,
    Json(req): Json<RetroRequest>,
) -> Result<Json<NoteView>, ServiceError> {
    Ok(Json(s.retro(&id, req).await?))
}

async fn view(State(s): Shared, Path(id): Path<String>) -> Result<Json<NoteView>, ServiceError> {
    Ok(Json(s.note_view(&id).await?))
}

async fn export(State(s): Shared, Path(id): Path<String>) -> Result<Json<ExportedNote>, ServiceError> {
    Ok(Json(s.export(&id).await?))
}

async fn health(State(s): Shared) -> Json<Health> {
    Json(s.health())
}

async fn demo_patients(State(s): Shared) -> Json<Vec<PatientContext>> {
    Json(s.demo_patients.clone())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/demo/patients", get(demo_patients))
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/{id}", get(view))
        .route("/v1/sessions/{id}/suggest", post(suggest))
        .route("/v1/sessions/{id}/accept", post(accept))
        .route("/v1/sessions/{id}/retro", post(retro))
        .route("/v1/sessions/{id}/export", get(export))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
