//! HTTP routes over in-memory sessions.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;

use twosys_core::bank::{ClassifyOptions, ThinkBank};
use twosys_core::config::{BusyPolicy, Config};
use twosys_core::model::{caption, Family, PrimitiveAction, Scene};
use twosys_core::orchestrator::{EpisodeResult, Event, EventKind, Executive, Gate, Session};

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// Step-through pacing plus abort-on-reset.
#[derive(Default)]
pub struct StepGate {
    step_through: AtomicBool,
    abort: AtomicBool,
    permits: Mutex<usize>,
    cv: Condvar,
}

impl StepGate {
    pub fn set_step_through(&self, on: bool) {
        self.step_through.store(on, Ordering::SeqCst);
        self.cv.notify_all();
    }

    pub fn release(&self, n: usize) {
        *lock(&self.permits) += n;
        self.cv.notify_all();
    }

    fn abort(&self, on: bool) {
        self.abort.store(on, Ordering::SeqCst);
        if !on {
            *lock(&self.permits) = 0;
        }
        self.cv.notify_all();
    }
}

impl Gate for StepGate {
    fn paced(&self) -> bool {
        self.step_through.load(Ordering::SeqCst)
    }

    fn admit(&self, _: &PrimitiveAction) -> bool {
        let mut permits = lock(&self.permits);
        loop {
            if self.abort.load(Ordering::SeqCst) {
                return false;
            }
            if !self.step_through.load(Ordering::SeqCst) {
                return true;
            }
            if *permits > 0 {
                *permits -= 1;
                return true;
            }
            permits = self.cv.wait(permits).unwrap_or_else(|p| p.into_inner());
        }
    }
}

struct EventBuf {
    log: Vec<Event>,
    tx: broadcast::Sender<Event>,
}

/// Snapshots readable while an episode holds the session.
struct Views {
    scene: Scene,
    episodes: Vec<EpisodeResult>,
}

pub struct SessionHandle {
    session: Mutex<Session>,
    events: Arc<Mutex<EventBuf>>,
    views: Arc<RwLock<Views>>,
    pub gate: StepGate,
    inflight: AtomicUsize,
}

pub struct AppState {
    pub config: Config,
    executive: Arc<Executive>,
    bank: Arc<ThinkBank>,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: Config) -> Result<Self, twosys_core::config::ConfigError> {
        let executive = Arc::new(config.executive()?);
        Ok(AppState::with_executive(config, executive))
    }

    pub fn with_executive(config: Config, executive: Arc<Executive>) -> Self {
        AppState {
            bank: executive.bank.clone(),
            config,
            executive,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn get(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).get(id).cloned()
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", axum::routing::delete(delete_session))
        .route("/v1/sessions/{id}/reset", post(reset))
        .route("/v1/sessions/{id}/instruction", post(instruction))
        .route("/v1/sessions/{id}/scene", get(scene))
        .route("/v1/sessions/{id}/episodes/{n}", get(episode))
        .route("/v1/sessions/{id}/stream", get(stream_events))
        .route("/v1/sessions/{id}/mode", post(mode))
        .route("/v1/sessions/{id}/release", post(release))
        .route("/v1/bank/classify", get(classify))
        .with_state(state)
}

fn error(status: StatusCode, kind: &str, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({"error": kind, "message": message.to_string()}))).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, "not_found", format!("no session `{id}`"))
}

/// Extracts a JSON body, answering malformed input with 400 rather than axum's defaults.
fn body<T: serde::de::DeserializeOwned + Default>(raw: &str) -> Result<T, Response> {
    if raw.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(raw).map_err(|e| error(StatusCode::BAD_REQUEST, "bad_request", e))
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CreateBody {
    step_through: Option<bool>,
    seed: Option<u64>,
    family: Option<String>,
}

async fn create_session(State(st): State<Shared>, raw: String) -> Response {
    let b: CreateBody = match body(&raw) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::SeqCst));
    let (tx, _) = broadcast::channel(4096);
    let events = Arc::new(Mutex::new(EventBuf { log: Vec::new(), tx }));
    let views = Arc::new(RwLock::new(Views { scene: Scene::new(st.config.sim.width, st.config.sim.height), episodes: Vec::new() }));
    let (ev, vw) = (events.clone(), views.clone());
    let listener = Arc::new(move |e: &Event| {
        if let EventKind::SceneUpdate { scene, .. } = &e.kind {
            vw.write().unwrap_or_else(|p| p.into_inner()).scene = scene.clone();
        }
        let mut buf = lock(&ev);
        buf.log.push(e.clone());
        let _ = buf.tx.send(e.clone());
    });
    let mut session = Session::new(id.clone(), st.executive.clone(), st.config.sim.width, st.config.sim.height).with_listener(listener);
    if let Some(dir) = &st.config.log.dir {
        session = session.with_log_dir(dir.clone());
    }
    if b.seed.is_some() || b.family.is_some() {
        let family = b.family.unwrap_or_else(|| "pick_color".into());
        if let Err(e) = session.reset(b.seed.unwrap_or(0), &family) {
            return error(StatusCode::BAD_REQUEST, "unsupported_family", e);
        }
    }
    let handle = Arc::new(SessionHandle {
        session: Mutex::new(session),
        events,
        views,
        gate: StepGate::default(),
        inflight: AtomicUsize::new(0),
    });
    let step_through = b.step_through.unwrap_or(st.config.server.step_through);
    handle.gate.set_step_through(step_through);
    st.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id.clone(), handle);
    (StatusCode::CREATED, Json(json!({"id": id, "step_through": step_through}))).into_response()
}

async fn delete_session(State(st): State<Shared>, Path(id): Path<String>) -> Response {
    let removed = st.sessions.write().unwrap_or_else(|p| p.into_inner()).remove(&id);
    match removed {
        Some(h) => {
            h.gate.abort(true);
            StatusCode::NO_CONTENT.into_response()
        }
        None => not_found(&id),
    }
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResetBody {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    family: String,
}

async fn reset(State(st): State<Shared>, Path(id): Path<String>, raw: String) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let b: ResetBody = match body(&raw) {
        Ok(b) => b,
        Err(r) => return r,
    };
    if b.family.parse::<Family>().is_err() {
        return error(StatusCode::BAD_REQUEST, "unsupported_family", format!("unsupported task family `{}`", b.family));
    }
    h.gate.abort(true);
    let task = tokio::task::spawn_blocking(move || {
        let mut s = lock(&h.session);
        h.gate.abort(false);
        s.reset(b.seed, &b.family).map(|scene| (caption(scene), scene.clone())).map_err(|e| e.to_string())
    });
    match task.await {
        Ok(Ok((caption, scene))) => Json(json!({"caption": caption, "scene": scene})).into_response(),
        Ok(Err(e)) => error(StatusCode::BAD_REQUEST, "unsupported_family", e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e),
    }
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstructionBody {
    #[serde(default)]
    text: String,
    /// Answer 202 at once and let the result arrive on the stream.
    #[serde(default)]
    nowait: bool,
}

async fn instruction(State(st): State<Shared>, Path(id): Path<String>, raw: String) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let b: InstructionBody = match body(&raw) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let limit = match st.config.server.busy {
        BusyPolicy::Reject => 1,
        BusyPolicy::Queue => 1 + st.config.server.queue_depth,
    };
    if h.inflight.fetch_add(1, Ordering::SeqCst) >= limit {
        h.inflight.fetch_sub(1, Ordering::SeqCst);
        return error(StatusCode::CONFLICT, "busy", "an episode is already running on this session");
    }
    let worker = h.clone();
    let task = tokio::task::spawn_blocking(move || {
        let mut s = lock(&worker.session);
        let result = s.handle_instruction(&b.text, &worker.gate).clone();
        worker.views.write().unwrap_or_else(|p| p.into_inner()).episodes.push(result.clone());
        drop(s);
        worker.inflight.fetch_sub(1, Ordering::SeqCst);
        result
    });
    if b.nowait {
        return (StatusCode::ACCEPTED, Json(json!({"accepted": true}))).into_response();
    }
    match task.await {
        Ok(r) => Json(r).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e),
    }
}

async fn scene(State(st): State<Shared>, Path(id): Path<String>) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let scene = h.views.read().unwrap_or_else(|p| p.into_inner()).scene.clone();
    Json(json!({"caption": caption(&scene), "scene": scene})).into_response()
}

async fn episode(State(st): State<Shared>, Path((id, n)): Path<(String, u64)>) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let views = h.views.read().unwrap_or_else(|p| p.into_inner());
    match views.episodes.iter().find(|e| e.episode == n) {
        Some(e) => Json(e).into_response(),
        None => error(StatusCode::NOT_FOUND, "not_found", format!("no episode {n} in session `{id}`")),
    }
}

#[derive(Deserialize)]
struct StreamQuery {
    after: Option<u64>,
}

fn sse(e: &Event) -> SseEvent {
    SseEvent::default().id(e.seq.to_string()).event(e.kind.name()).data(serde_json::to_string(e).expect("events serialise"))
}

/// Replays the log after the cursor (`?after=` or `Last-Event-ID`), then follows live events.
async fn stream_events(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<StreamQuery>, headers: HeaderMap) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let after = q
        .after
        .or_else(|| headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    let (backlog, rx) = {
        let buf = lock(&h.events);
        let backlog: Vec<Event> = buf.log.iter().filter(|e| e.seq > after).cloned().collect();
        (backlog, buf.tx.subscribe())
    };
    drop(h);
    let last = backlog.last().map_or(after, |e| e.seq);
    let live = stream::unfold((rx, last), |(mut rx, last)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.seq <= last => continue,
                Ok(e) => {
                    let seq = e.seq;
                    return Some((e, (rx, seq)));
                }
                Err(_) => return None,
            }
        }
    });
    let events: std::pin::Pin<Box<dyn Stream<Item = Result<SseEvent, Infallible>> + Send>> =
        Box::pin(stream::iter(backlog).chain(live).map(|e| Ok(sse(&e))));
    Sse::new(events).keep_alive(KeepAlive::default()).into_response()
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeBody {
    #[serde(default)]
    step_through: bool,
}

async fn mode(State(st): State<Shared>, Path(id): Path<String>, raw: String) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let b: ModeBody = match body(&raw) {
        Ok(b) => b,
        Err(r) => return r,
    };
    h.gate.set_step_through(b.step_through);
    Json(json!({"step_through": b.step_through})).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReleaseBody {
    #[serde(default = "one")]
    count: usize,
}

impl Default for ReleaseBody {
    fn default() -> Self {
        ReleaseBody { count: 1 }
    }
}

fn one() -> usize {
    1
}

async fn release(State(st): State<Shared>, Path(id): Path<String>, raw: String) -> Response {
    let Some(h) = st.get(&id) else { return not_found(&id) };
    let b: ReleaseBody = match body(&raw) {
        Ok(b) => b,
        Err(r) => return r,
    };
    h.gate.release(b.count);
    Json(json!({"released": b.count})).into_response()
}

#[derive(Deserialize)]
struct ClassifyQuery {
    text: Option<String>,
    k: Option<usize>,
}

async fn classify(State(st): State<Shared>, Query(q): Query<ClassifyQuery>) -> Response {
    let Some(text) = q.text.filter(|t| !t.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "bad_request", "missing `text`");
    };
    let k = q.k.unwrap_or(st.config.bank.k);
    let bank = st.bank.clone();
    let task = tokio::task::spawn_blocking(move || bank.classify(&text, ClassifyOptions { k, floor: None }));
    match task.await {
        Ok(Ok(c)) => Json(serde_json::to_value(c).unwrap_or(Value::Null)).into_response(),
        Ok(Err(e)) => error(StatusCode::BAD_REQUEST, "classify", e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e),
    }
}
