//! Live console service: state stream, utterance injection, map description.
//!
//! The session runs on its own thread. Injections are published onto the
//! session bus as transcripts and the caller waits for the session to report
//! the outcome of that transcript. A monitor thread fans every state and
//! speech envelope out to connected sockets.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, PoisonError};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guidebot::messages::{Payload, TranscriptMsg, TOPIC_TRANSCRIPT};
use guidebot::msgbus::{Bus, Monitor};
use guidebot::simrobot::{run_session, Session};
use guidebot::speechflow::HandleOutcome;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, oneshot};

/// How long an injection waits for the session to handle it.
pub const OUTCOME_TIMEOUT: Duration = Duration::from_secs(5);

const STREAM_CAPACITY: usize = 4096;

type Waiters = HashMap<u64, oneshot::Sender<Result<HandleOutcome, String>>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectRequest {
    text: String,
}

/// Shared state behind the HTTP and socket handlers.
pub struct Hub {
    bus: Bus,
    waiters: Mutex<Waiters>,
    stream: broadcast::Sender<String>,
    latest_state: Mutex<Option<String>>,
    map: Value,
}

fn error_reply(message: impl Into<String>) -> Value {
    json!({"type": "error", "message": message.into()})
}

fn outcome_reply(seq: u64, outcome: &HandleOutcome) -> Value {
    let mut v = serde_json::to_value(outcome).unwrap_or(Value::Null);
    v["type"] = json!("outcome");
    v["transcript_seq"] = json!(seq);
    v
}

/// Wire form of a bus envelope for the state stream, if it is streamed.
pub fn stream_message(payload: &Payload, seq: u64) -> Option<String> {
    let (kind, body) = match payload {
        Payload::State(s) => ("state", serde_json::to_value(s)),
        Payload::SpeechOut(s) => ("speech", serde_json::to_value(s)),
        _ => return None,
    };
    let body = body.ok()?;
    Some(json!({"type": kind, "seq": seq, "payload": body}).to_string())
}

impl Hub {
    fn new(bus: Bus, map: Value) -> Self {
        let (stream, _) = broadcast::channel(STREAM_CAPACITY);
        Self {
            bus,
            waiters: Mutex::new(HashMap::new()),
            stream,
            latest_state: Mutex::new(None),
            map,
        }
    }

    /// Resolves the waiter of a handled transcript, if anyone is waiting.
    fn resolve(&self, seq: u64, outcome: &Result<HandleOutcome, String>) {
        let waiter = self
            .waiters
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .remove(&seq);
        if let Some(tx) = waiter {
            let _ = tx.send(outcome.clone());
        }
    }

    /// Parses an injection payload and publishes it. Returns the reply JSON.
    pub async fn inject(&self, raw: &[u8]) -> (StatusCode, Value) {
        let req: InjectRequest = match serde_json::from_slice(raw) {
            Ok(r) => r,
            Err(e) => return (StatusCode::BAD_REQUEST, error_reply(format!("malformed injection: {e}"))),
        };
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or_default();
        let (tx, rx) = oneshot::channel();
        let seq = {
            // held across publish so the outcome cannot beat the waiter
            let mut waiters = self.waiters.lock().unwrap_or_else(PoisonError::into_inner);
            let published = self.bus.publish_to(
                TOPIC_TRANSCRIPT,
                Payload::Transcript(TranscriptMsg {
                    text: req.text,
                    timestamp_ms: now,
                    confidence: None,
                }),
            );
            match published {
                Ok(seq) => {
                    waiters.insert(seq, tx);
                    seq
                }
                Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, error_reply(e.to_string())),
            }
        };
        match tokio::time::timeout(OUTCOME_TIMEOUT, rx).await {
            Ok(Ok(Ok(outcome))) => (StatusCode::OK, outcome_reply(seq, &outcome)),
            Ok(Ok(Err(msg))) => (StatusCode::UNPROCESSABLE_ENTITY, error_reply(msg)),
            Ok(Err(_)) | Err(_) => {
                self.waiters
                    .lock()
                    .unwrap_or_else(PoisonError::into_inner)
                    .remove(&seq);
                (StatusCode::SERVICE_UNAVAILABLE, error_reply("session did not handle the utterance"))
            }
        }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<String> {
        self.stream.subscribe()
    }

    fn publish_stream(&self, payload: &Payload, seq: u64) {
        if let Some(text) = stream_message(payload, seq) {
            if matches!(payload, Payload::State(_)) {
                *self.latest_state.lock().unwrap_or_else(PoisonError::into_inner) = Some(text.clone());
            }
            // no receivers is fine
            let _ = self.stream.send(text);
        }
    }

    fn latest_state(&self) -> Option<String> {
        self.latest_state.lock().unwrap_or_else(PoisonError::into_inner).clone()
    }
}

/// A session running on background threads, plus the hub that fronts it.
pub struct LiveSession {
    hub: Arc<Hub>,
    shutdown: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl LiveSession {
    pub fn start(mut session: Session) -> Self {
        let map = serde_json::to_value(session.site().to_document()).unwrap_or(Value::Null);
        let hub = Arc::new(Hub::new(session.bus().clone(), map));
        let monitor = session.bus().monitor();
        let shutdown = Arc::new(AtomicBool::new(false));

        let hook_hub = hub.clone();
        session.set_outcome_hook(move |seq, outcome| hook_hub.resolve(seq, outcome));

        let flag = shutdown.clone();
        let session_thread = std::thread::Builder::new()
            .name("session".into())
            .spawn(move || run_session(&mut session, &flag))
            .expect("spawn session thread");

        let flag = shutdown.clone();
        let fan_hub = hub.clone();
        let fanout = std::thread::Builder::new()
            .name("stream".into())
            .spawn(move || fan_out(&monitor, &fan_hub, &flag))
            .expect("spawn stream thread");

        Self {
            hub,
            shutdown,
            threads: vec![session_thread, fanout],
        }
    }

    pub fn hub(&self) -> Arc<Hub> {
        self.hub.clone()
    }

    /// Flag that stops the session and stream threads when set.
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        self.shutdown.clone()
    }

    /// Stops the background threads and waits for them.
    pub fn stop(self) {
        self.shutdown.store(true, Ordering::Relaxed);
        for t in self.threads {
            let _ = t.join();
        }
    }
}

fn fan_out(monitor: &Monitor, hub: &Hub, shutdown: &AtomicBool) {
    while !shutdown.load(Ordering::Relaxed) {
        if let Some(env) = monitor.recv_timeout(Duration::from_millis(50)) {
            hub.publish_stream(&env.payload, env.seq);
        }
    }
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/map", get(map_handler))
        .route("/utterance", post(utterance_handler))
        .route("/ws", get(ws_handler))
        .with_state(hub)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    hub: Arc<Hub>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(hub))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `addr` and returns the listener with its actual local address.
pub async fn bind(addr: &str) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

async fn map_handler(State(hub): State<Arc<Hub>>) -> Json<Value> {
    Json(hub.map.clone())
}

async fn utterance_handler(State(hub): State<Arc<Hub>>, body: Bytes) -> Response {
    let (status, reply) = hub.inject(&body).await;
    (status, Json(reply)).into_response()
}

async fn ws_handler(State(hub): State<Arc<Hub>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| console(socket, hub))
}

async fn console(mut socket: WebSocket, hub: Arc<Hub>) {
    let mut stream = hub.subscribe();
    if let Some(state) = hub.latest_state() {
        if socket.send(Message::Text(state.into())).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => hub.inject(text.as_bytes()).await.1,
                    Some(Ok(Message::Binary(_))) => error_reply("injections must be text frames"),
                    Some(Ok(_)) => continue,
                    Some(Err(_)) | None => return,
                };
                if socket.send(Message::Text(reply.to_string().into())).await.is_err() {
                    return;
                }
            }
            event = stream.recv() => {
                let text = match event {
                    Ok(text) => text,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        log::warn!("console fell behind, dropped {n} stream messages");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => return,
                };
                if socket.send(Message::Text(text.into())).await.is_err() {
                    return;
                }
            }
        }
    }
}
