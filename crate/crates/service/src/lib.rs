//! HTTP/JSON sessions in which a human plays Eve and the server answers as Odd.
//!
//! Each session is guarded by its own mutex, so requests against one game are
//! serialized while different games proceed concurrently.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use bmgame_core::game::{record_move, step, GameConfig, GameKind, GameState, Proposal, Strategy, Transcript};
use bmgame_core::maps::LinearMap;
use bmgame_core::matrix::Matrix;
use bmgame_core::metric::{FinMetricSpace, MetricEmbedding, MetricWire};
use bmgame_core::metric_game::{
    build_metric_odd, metric_step, record_metric_move, MetricProposal, MetricState, MetricStrategy,
};
use bmgame_core::space::{PolyNormedSpace, SpaceWire};
use bmgame_core::strategies::build_odd;
use bmgame_core::Error;

/// Environment variable holding the default listening port.
pub const PORT_ENV: &str = "BMGAME_PORT";
pub const DEFAULT_PORT: u16 = 8080;

pub fn default_addr() -> SocketAddr {
    let port = std::env::var(PORT_ENV).ok().and_then(|p| p.parse().ok()).unwrap_or(DEFAULT_PORT);
    SocketAddr::from(([127, 0, 0, 1], port))
}

enum Game {
    Normed { state: GameState, odd: Box<dyn Strategy> },
    Metric { state: MetricState, odd: Box<dyn MetricStrategy> },
}

pub struct Session {
    id: String,
    created: u64,
    transcript: Transcript,
    game: Game,
}

type Shared = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct AppState {
    sessions: Mutex<HashMap<String, Shared>>,
    counter: AtomicU64,
}

pub fn app() -> Router {
    router(Arc::new(AppState::default()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}", get(get_game).delete(delete_game))
        .route("/games/{id}/moves", post(post_move))
        .route("/games/{id}/validate", post(validate_move))
        .route("/games/{id}/transcript", get(get_transcript))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app()).await
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, body: json!({ "error": "not-found", "message": format!("no game {id}") }) }
    }

    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, body: json!({ "error": "bad-request", "message": msg.into() }) }
    }

    fn invalid(e: &Error) -> Self {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, body: diagnostic(e) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Error kind, message and, where the check produced one, its exact witness.
pub fn diagnostic(e: &Error) -> Value {
    fn to<T: serde::Serialize>(v: &T) -> Value {
        serde_json::to_value(v).expect("witness serializes")
    }
    let (kind, witness) = match e {
        Error::NotIsometric(w) => ("not-isometric", to(w)),
        Error::NotEpsilonIsometric { witness, .. } => ("not-epsilon-isometric", to(witness)),
        Error::TriangleViolation(t) => ("triangle-violation", to(t)),
        Error::DistortedPair(p) => ("distorted-pair", to(p)),
        Error::ClassViolation { class, detail } => ("class-violation", json!({ "class": class, "detail": detail })),
        Error::DimensionCap { cap, dim } => ("dimension-cap", json!({ "cap": cap, "dim": dim })),
        Error::Degenerate(_) | Error::NotSymmetric => ("degenerate-ball", Value::Null),
        Error::InvalidMetric(_) => ("invalid-metric", Value::Null),
        Error::Parse(_) => ("parse", Value::Null),
        _ => ("invalid-move", Value::Null),
    };
    json!({ "error": kind, "message": e.to_string(), "witness": witness })
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct ConfigOverrides {
    pub odd: Option<String>,
    pub class: Option<String>,
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub q: Option<u64>,
    pub budget: Option<usize>,
    pub max_dim: Option<usize>,
    pub coverage_stages: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct CreateGame {
    pub kind: GameKind,
    #[serde(default)]
    pub config: ConfigOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct LinkInput {
    pub matrix: Option<Matrix>,
    pub assignment: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
pub struct MoveRequest {
    #[serde(default)]
    pub space: Option<SpaceWire>,
    #[serde(default)]
    pub metric: Option<MetricWire>,
    #[serde(default)]
    pub link: LinkInput,
}

fn build_config(req: &CreateGame) -> Result<GameConfig, Error> {
    let o = &req.config;
    let default_odd = match req.kind {
        GameKind::Normed => "gurarii",
        GameKind::NormedRestricted => "restricted",
        GameKind::Metric => "urysohn",
    };
    let odd = o.odd.clone().unwrap_or_else(|| default_odd.into());
    let seed = o.seed.unwrap_or(0);
    let mut c = match req.kind {
        GameKind::Normed => GameConfig::normed("human", &odd, 1, seed),
        GameKind::NormedRestricted => {
            GameConfig::restricted("human", &odd, o.class.as_deref().unwrap_or("linf"), 1, seed)
        }
        GameKind::Metric => GameConfig::metric("human", &odd, 1, seed),
    };
    c.d = o.d.unwrap_or(c.d);
    c.q = o.q.unwrap_or(c.q);
    c.budget = o.budget.unwrap_or(c.budget);
    c.max_dim = o.max_dim.unwrap_or(c.max_dim);
    c.coverage_stages = o.coverage_stages.unwrap_or(c.coverage_stages);
    c.check()?;
    Ok(c)
}

impl Session {
    fn new(id: String, req: &CreateGame) -> Result<Self, Error> {
        let config = build_config(req)?;
        let game = match config.kind {
            GameKind::Metric => Game::Metric { state: MetricState::new(), odd: build_metric_odd(&config)? },
            _ => Game::Normed { state: GameState::new(config.rule_class()?, config.max_dim), odd: build_odd(&config)? },
        };
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Session { id, created, transcript: Transcript::new(config), game })
    }

    /// The transcript with `rounds` set to the moves played so far.
    fn transcript(&self) -> Transcript {
        let mut t = self.transcript.clone();
        t.config.rounds = t.moves.len().max(1);
        t
    }

    /// Every challenge announced in Odd's annotations with its status.
    fn challenges(&self) -> Vec<Value> {
        let t = &self.transcript;
        let mut out = Vec::new();
        for m in &t.moves {
            let Some(list) = m.annotations.get("enqueued").and_then(Value::as_array) else { continue };
            for c in list {
                let id = c.get("id").and_then(Value::as_str).unwrap_or_default();
                let cert = t.certificates.iter().find(|x| x.challenge == id);
                let mut row = c.clone();
                row["status"] = json!(if cert.is_some() { "certified" } else { "pending" });
                row["certified_at"] = json!(cert.map(|x| x.stage));
                out.push(row);
            }
        }
        out
    }

    fn view(&self) -> Value {
        let t = &self.transcript;
        let pending = t.moves.iter().rev().find_map(|m| m.annotations.get("queue").cloned()).unwrap_or(json!(0));
        json!({
            "id": self.id,
            "kind": t.config.kind,
            "created": self.created,
            "config": t.config,
            "round": t.moves.len(),
            "stages": t.moves,
            "certificates": t.certificates,
            "queue": { "pending": pending, "challenges": self.challenges() },
            "abort": t.abort,
        })
    }

    /// Checks a candidate Eve move and returns it ready to be pushed.
    fn candidate(&self, req: &MoveRequest) -> Result<Candidate, Error> {
        if self.transcript.moves.len() % 2 == 1 {
            return Err(Error::Rejected("it is Odd's turn".into()));
        }
        match &self.game {
            Game::Normed { state, .. } => {
                let w = req.space.as_ref().ok_or_else(|| Error::Parse("a normed move needs a space".into()))?;
                let space = Arc::new(PolyNormedSpace::from_wire(w)?);
                let last = state.last_space();
                let m = match &req.link.matrix {
                    Some(m) => m.clone().with_cols(last.dim())?,
                    None => prefix_inclusion(last.dim(), space.dim())?,
                };
                let link = LinearMap::new(last, space.clone(), m)?;
                state.validate_move(&space, &link)?;
                Ok(Candidate::Normed(Proposal::new(space, link)))
            }
            Game::Metric { state, .. } => {
                let w = req.metric.as_ref().ok_or_else(|| Error::Parse("a metric move needs a metric".into()))?;
                let space = Arc::new(FinMetricSpace::new(w.points.clone(), w.dist.clone())?);
                let last = state.last_space();
                let a = req.link.assignment.clone().unwrap_or_else(|| (0..last.len()).collect());
                let link = MetricEmbedding::unchecked(last, space.clone(), a)?;
                state.validate_move(&space, &link)?;
                Ok(Candidate::Metric(MetricProposal::new(space, link)))
            }
        }
    }

    /// Plays Eve's move and Odd's reply; returns the two records.
    fn play(&mut self, c: Candidate) -> Value {
        let before = self.transcript.certificates.len();
        let round = self.transcript.moves.len();
        let t = &mut self.transcript;
        let reply = match (&mut self.game, c) {
            (Game::Normed { state, odd }, Candidate::Normed(p)) => {
                t.moves.push(record_move(round, &p));
                state.push(p.space, p.link);
                step(state, odd.as_mut(), t)
            }
            (Game::Metric { state, odd }, Candidate::Metric(p)) => {
                t.moves.push(record_metric_move(round, &p));
                state.push(p.space, p.link);
                metric_step(state, odd.as_mut(), t)
            }
            _ => unreachable!("candidate built for this game"),
        };
        if let Err(e) = &reply {
            log::warn!("odd failed in game {}: {e}", self.id);
            t.abort = Some(format!("round {}, odd: {e}", round + 1));
        }
        json!({
            "eve": t.moves.get(round),
            "odd": t.moves.get(round + 1),
            "certificates": t.certificates[before..],
            "abort": t.abort,
            "state": self.view(),
        })
    }
}

enum Candidate {
    Normed(Proposal),
    Metric(MetricProposal),
}

/// `[I; 0]`: the old space as the first coordinates of the new one.
fn prefix_inclusion(from: usize, to: usize) -> Result<Matrix, Error> {
    if from > to {
        return Err(Error::DimensionMismatch(format!("no default link from dimension {from} into {to}")));
    }
    let mut m = Matrix::zeros(to, from);
    for i in 0..from {
        m[(i, i)] = bmgame_core::rational::one();
    }
    Ok(m)
}

fn lookup(app: &AppState, id: &str) -> Result<Shared, ApiError> {
    app.sessions.lock().expect("session table").get(id).cloned().ok_or_else(|| ApiError::not_found(id))
}

/// Runs `f` on the session off the async workers, holding its lock.
async fn with_session<R: Send + 'static>(
    app: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<R, ApiError> + Send + 'static,
) -> Result<R, ApiError> {
    let s = lookup(app, id)?;
    tokio::task::spawn_blocking(move || f(&mut s.lock().expect("session lock")))
        .await
        .map_err(|e| ApiError::bad_request(format!("worker failed: {e}")))?
}

fn parse<T: serde::de::DeserializeOwned>(body: Value) -> Result<T, ApiError> {
    serde_json::from_value(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn create_game(State(app): State<Arc<AppState>>, Json(body): Json<Value>) -> Result<impl IntoResponse, ApiError> {
    let req: CreateGame = parse(body)?;
    let id = format!("g{}", app.counter.fetch_add(1, Ordering::Relaxed) + 1);
    let session = Session::new(id.clone(), &req).map_err(|e| ApiError::invalid(&e))?;
    let view = session.view();
    app.sessions.lock().expect("session table").insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "state": view }))))
}

async fn get_game(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(&app, &id, |s| Ok(Json(s.view()))).await
}

async fn get_transcript(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Transcript>, ApiError> {
    with_session(&app, &id, |s| Ok(Json(s.transcript()))).await
}

async fn delete_game(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match app.sessions.lock().expect("session table").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

async fn post_move(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<Value>,
) -> Result<Json<Value>, ApiError> {
    let req: MoveRequest = parse(body)?;
    with_session(&app, &id, move |s| {
        let c = s.candidate(&req).map_err(|e| ApiError::invalid(&e))?;
        Ok(Json(s.play(c)))
    })
    .await
}

async fn validate_move(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<Value>,
) -> Result<Json<Value>, ApiError> {
    let req: MoveRequest = parse(body)?;
    with_session(&app, &id, move |s| {
        Ok(Json(match s.candidate(&req) {
            Ok(_) => json!({ "valid": true }),
            Err(e) => json!({ "valid": false, "diagnostic": diagnostic(&e) }),
        }))
    })
    .await
}
