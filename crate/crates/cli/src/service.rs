//! HTTP + WebSocket service for human-vs-BPP games.
//!
//! Each session is one human against one BPP, playing a sequence of games
//! with seats alternating. BPP moves as soon as it is to act. Learned
//! opponent models are shared across sessions and keyed by the client's
//! display name; anonymous sessions feed the pooled model.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use bayespoker::decision::{Action, CurveParams};
use bayespoker::engine::{EngineError, GameState, Seat};
use bayespoker::matrices::{ActionBook, MatrixSet};
use bayespoker::players::{Agent, BppAgent};
use bayespoker::rng::{self, StreamRng};

use crate::wire::{
    result_payload, state_payload, ActionRequestPayload, ActionSubmit, ErrorPayload, ResultPayload, StatePayload,
    WireMessage,
};

const BPP_ID: &str = "bpp";

pub struct AppState {
    matrices: Arc<MatrixSet>,
    curves: CurveParams,
    book: Arc<Mutex<ActionBook>>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    base_seed: u64,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(matrices: Arc<MatrixSet>, curves: CurveParams, base_seed: u64) -> Arc<AppState> {
        let book = Arc::new(Mutex::new(matrices.action_counts.clone()));
        Arc::new(AppState {
            matrices,
            curves,
            book,
            sessions: Mutex::new(HashMap::new()),
            base_seed,
            counter: AtomicU64::new(0),
        })
    }

    /// Snapshot of the shared opponent models.
    pub fn action_book(&self) -> ActionBook {
        self.book.lock().expect("action book lock").clone()
    }

    fn session(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        self.sessions.lock().expect("session map lock").get(id).cloned()
    }
}

#[derive(Debug, Default, Deserialize)]
struct CreateGame {
    name: Option<String>,
    seed: Option<u64>,
    seat: Option<Seat>,
}

#[derive(Debug)]
enum SessionError {
    Engine(EngineError),
    BadAction(String),
    InProgress,
    Bpp(String),
}

impl SessionError {
    fn status(&self) -> StatusCode {
        match self {
            SessionError::BadAction(_) => StatusCode::BAD_REQUEST,
            SessionError::Bpp(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        }
    }

    fn payload(&self, legal: Vec<Action>) -> ErrorPayload {
        let error = match self {
            SessionError::Engine(EngineError::OutOfTurn(_)) => "not your turn".to_string(),
            SessionError::Engine(e) => e.to_string(),
            SessionError::BadAction(e) => e.clone(),
            SessionError::InProgress => "the current game is still in progress".to_string(),
            SessionError::Bpp(e) => e.clone(),
        };
        let legal_actions = match self {
            SessionError::Engine(EngineError::IllegalAction { .. }) | SessionError::BadAction(_) => Some(legal),
            _ => None,
        };
        ErrorPayload { error, legal_actions }
    }
}

struct Session {
    id: String,
    seed: u64,
    name: String,
    first_seat: Seat,
    game_index: u64,
    game: GameState,
    bpp: BppAgent,
    bpp_rng: StreamRng,
    net: i64,
    settled: bool,
    tx: broadcast::Sender<WireMessage>,
}

impl Session {
    fn human_seat(&self) -> Seat {
        (self.first_seat + self.game_index as usize) % 2
    }

    fn game_seed(&self) -> u64 {
        rng::child_seed(self.seed, self.game_index)
    }

    fn deal(&mut self) -> Result<(), SessionError> {
        let human = self.human_seat();
        let mut players = [BPP_ID.to_string(), BPP_ID.to_string()];
        players[human] = self.name.clone();
        let seed = self.game_seed();
        self.game = GameState::shuffled(players, seed).map_err(SessionError::Engine)?;
        self.bpp_rng = rng::stream(seed, 2 - human as u64);
        self.settled = false;
        self.advance()
    }

    /// Lets BPP act until it is the human's turn or the game ends.
    fn advance(&mut self) -> Result<(), SessionError> {
        let bpp = 1 - self.human_seat();
        while !self.game.is_over() && self.game.to_act() == bpp {
            let view = self.game.view(bpp);
            let action = self
                .bpp
                .decide(&view, &mut self.bpp_rng)
                .map_err(|e| SessionError::Bpp(e.to_string()))?;
            if let Err(e) = self.game.apply(bpp, action) {
                return Err(SessionError::Bpp(e.to_string()));
            }
        }
        if self.game.is_over() && !self.settled {
            self.settled = true;
            self.net += self.game.nets()[self.human_seat()];
            let summary = self.game.summary(bpp).expect("game over");
            self.bpp.observe(&summary);
        }
        Ok(())
    }

    fn state(&self) -> StatePayload {
        state_payload(&self.id, self.game_index, &self.game, self.human_seat(), self.net)
    }

    fn result(&self) -> Option<ResultPayload> {
        result_payload(self.game_index, &self.game, self.human_seat(), self.net)
    }

    /// Messages describing the current position, in push order.
    fn snapshot(&self) -> Vec<WireMessage> {
        let mut out = vec![WireMessage::State(self.state())];
        match self.result() {
            Some(r) => out.push(WireMessage::Result(r)),
            None => {
                let legal = self.game.view(self.human_seat()).legal_actions;
                if !legal.is_empty() {
                    out.push(WireMessage::ActionRequest(ActionRequestPayload { legal_actions: legal }));
                }
            }
        }
        out
    }

    fn broadcast(&self) {
        for m in self.snapshot() {
            // no subscribers is fine
            let _ = self.tx.send(m);
        }
    }

    fn act(&mut self, action: &str) -> Result<(), SessionError> {
        let action: Action = action.parse().map_err(SessionError::BadAction)?;
        self.game
            .apply(self.human_seat(), action)
            .map_err(SessionError::Engine)?;
        self.advance()?;
        self.broadcast();
        Ok(())
    }

    fn next_game(&mut self) -> Result<(), SessionError> {
        if !self.game.is_over() {
            return Err(SessionError::InProgress);
        }
        self.game_index += 1;
        self.deal()?;
        self.broadcast();
        Ok(())
    }

    fn human_legal(&self) -> Vec<Action> {
        self.game.view(self.human_seat()).legal_actions
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/games", post(create_game))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/action", post(post_action))
        .route("/games/{id}/next", post(post_next))
        .route("/games/{id}/stream", get(stream))
        .with_state(state)
}

fn error_response(status: StatusCode, payload: ErrorPayload) -> Response {
    (status, Json(payload)).into_response()
}

fn unknown_session(id: &str) -> Response {
    error_response(
        StatusCode::NOT_FOUND,
        ErrorPayload {
            error: format!("unknown session {id}"),
            legal_actions: None,
        },
    )
}

#[derive(Serialize)]
struct GameResponse {
    session_id: String,
    state: StatePayload,
    result: Option<ResultPayload>,
}

fn game_response(s: &Session) -> GameResponse {
    GameResponse {
        session_id: s.id.clone(),
        state: s.state(),
        result: s.result(),
    }
}

async fn create_game(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: CreateGame = if body.iter().all(|b| b.is_ascii_whitespace()) {
        CreateGame::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => {
                return error_response(
                    StatusCode::BAD_REQUEST,
                    ErrorPayload {
                        error: format!("bad request body: {e}"),
                        legal_actions: None,
                    },
                )
            }
        }
    };
    let n = app.counter.fetch_add(1, Ordering::Relaxed);
    let seed = req.seed.unwrap_or_else(|| rng::child_seed(app.base_seed, n));
    let id = format!("s{n}-{seed:016x}");
    let bpp = BppAgent::new(BPP_ID, Arc::clone(&app.matrices), app.curves).with_book(Arc::clone(&app.book));
    let (tx, _) = broadcast::channel(256);
    let placeholder = GameState::shuffled(["".into(), "".into()], seed).expect("fresh deck deals");
    let mut session = Session {
        id: id.clone(),
        seed,
        name: req.name.unwrap_or_default(),
        first_seat: req.seat.unwrap_or(0) % 2,
        game_index: 0,
        game: placeholder,
        bpp,
        bpp_rng: rng::stream(seed, 0),
        net: 0,
        settled: false,
        tx,
    };
    if let Err(e) = session.deal() {
        return error_response(e.status(), e.payload(Vec::new()));
    }
    let body = game_response(&session);
    app.sessions
        .lock()
        .expect("session map lock")
        .insert(id, Arc::new(tokio::sync::Mutex::new(session)));
    (StatusCode::CREATED, Json(body)).into_response()
}

async fn get_game(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(s) = app.session(&id) else {
        return unknown_session(&id);
    };
    let s = s.lock().await;
    Json(game_response(&s)).into_response()
}

async fn post_action(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Response {
    let Some(s) = app.session(&id) else {
        return unknown_session(&id);
    };
    let submit: ActionSubmit = match serde_json::from_slice(&body) {
        Ok(a) => a,
        Err(e) => {
            return error_response(
                StatusCode::BAD_REQUEST,
                ErrorPayload {
                    error: format!("bad request body: {e}"),
                    legal_actions: None,
                },
            )
        }
    };
    let mut s = s.lock().await;
    match s.act(&submit.action) {
        Ok(()) => {
            let r = game_response(&s);
            Json(json!({"accepted": true, "state": r.state, "result": r.result})).into_response()
        }
        Err(e) => {
            let p = e.payload(s.human_legal());
            (
                e.status(),
                Json(json!({"accepted": false, "error": p.error, "legal_actions": p.legal_actions})),
            )
                .into_response()
        }
    }
}

async fn post_next(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(s) = app.session(&id) else {
        return unknown_session(&id);
    };
    let mut s = s.lock().await;
    match s.next_game() {
        Ok(()) => Json(game_response(&s)).into_response(),
        Err(e) => error_response(e.status(), e.payload(Vec::new())),
    }
}

async fn stream(State(app): State<Arc<AppState>>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    let Some(s) = app.session(&id) else {
        return unknown_session(&id);
    };
    ws.on_upgrade(move |socket| run_socket(socket, s))
}

async fn send(socket: &mut WebSocket, m: &WireMessage) -> bool {
    socket.send(Message::Text(m.to_json().into())).await.is_ok()
}

async fn run_socket(mut socket: WebSocket, session: Arc<tokio::sync::Mutex<Session>>) {
    let (mut rx, opening) = {
        let s = session.lock().await;
        (s.tx.subscribe(), s.snapshot())
    };
    for m in &opening {
        if !send(&mut socket, m).await {
            return;
        }
    }
    loop {
        tokio::select! {
            pushed = rx.recv() => match pushed {
                Ok(m) => {
                    if !send(&mut socket, &m).await {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    let snap = session.lock().await.snapshot();
                    for m in &snap {
                        if !send(&mut socket, m).await {
                            return;
                        }
                    }
                }
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let reply = handle_incoming(&session, text.as_str()).await;
                if let Some(err) = reply {
                    if !send(&mut socket, &err).await {
                        return;
                    }
                }
            }
        }
    }
}

/// Applies a client message; returns an error message for this client
/// only, or `None` when the outcome was broadcast.
async fn handle_incoming(session: &tokio::sync::Mutex<Session>, text: &str) -> Option<WireMessage> {
    let submit = match WireMessage::from_json(text) {
        Ok(WireMessage::ActionSubmit(a)) => a,
        Ok(_) => {
            return Some(WireMessage::Error(ErrorPayload {
                error: "clients may only send action_submit".into(),
                legal_actions: None,
            }))
        }
        Err(_) => match serde_json::from_str::<ActionSubmit>(text) {
            Ok(a) => a,
            Err(e) => {
                return Some(WireMessage::Error(ErrorPayload {
                    error: format!("bad message: {e}"),
                    legal_actions: None,
                }))
            }
        },
    };
    let mut s = session.lock().await;
    match s.act(&submit.action) {
        Ok(()) => None,
        Err(e) => Some(WireMessage::Error(e.payload(s.human_legal()))),
    }
}
