//! WebSocket session server with the read-only HTTP endpoints dashboards use.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::serve::ListenerExt;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use groundlink_core::canonical::to_canonical_line;
use groundlink_core::engine::EngineParams;
use groundlink_core::model::KnowledgeBase;
use groundlink_core::query::{
    apply_filter, minimap_traces, summarize, FilterSpec, MinimapTrace, ScopedSummary,
    SummaryBackend,
};
use groundlink_core::sync::{
    parse_client_frame, ClientFrame, ClientId, ServerFrame, Session, SessionError, Welcome,
    DEFAULT_QUEUE_CAP, DEFAULT_SESSION_CAP,
};
use groundlink_core::{save_knowledge_base, Entry};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

/// WebSocket close code for a client dropped for falling behind.
pub const GOING_AWAY: u16 = 1001;
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub session_cap: usize,
    pub queue_cap: usize,
    pub params: EngineParams,
    /// Static dashboard bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            session_cap: DEFAULT_SESSION_CAP,
            queue_cap: DEFAULT_QUEUE_CAP,
            params: EngineParams::default(),
            ui_dir: None,
        }
    }
}

struct Hub {
    session: Session,
    outboxes: BTreeMap<ClientId, mpsc::Sender<String>>,
}

impl Hub {
    /// Queues `frame` for `client`. A full queue drops the client: its
    /// sender is removed so the writer drains and closes with GoingAway.
    fn deliver(&mut self, client: &ClientId, frame: &str) {
        let Some(tx) = self.outboxes.get(client) else {
            return;
        };
        if tx.try_send(frame.to_string()).is_err() {
            tracing::warn!(%client, "outbound queue full, disconnecting");
            self.outboxes.remove(client);
            self.session.unregister(client);
        }
    }
}

struct AppState {
    kb: Arc<KnowledgeBase>,
    kb_bytes: Vec<u8>,
    config: ServerConfig,
    /// One ordering point per session.
    sessions: Mutex<HashMap<String, Hub>>,
}

fn frame_text(frame: &ServerFrame) -> String {
    to_canonical_line(frame)
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Body of `POST /query`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    #[serde(default)]
    pub filter: FilterSpec,
    #[serde(default)]
    pub summary: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryResponse {
    pub entries: Vec<Entry>,
    pub traces: Vec<MinimapTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<ScopedSummary>,
}

/// Runs a dashboard query. Shared by the HTTP endpoint and the `query` command
/// so both return the same entries for the same filter.
pub fn run_query(
    kb: &KnowledgeBase,
    req: &QueryRequest,
) -> Result<QueryResponse, groundlink_core::QueryError> {
    let entries = apply_filter(kb, &req.filter)?
        .into_iter()
        .cloned()
        .collect();
    let traces = minimap_traces(kb, &req.filter)?;
    let summary = if req.summary {
        Some(summarize(kb, &req.filter, SummaryBackend::Template)?)
    } else {
        None
    };
    Ok(QueryResponse {
        entries,
        traces,
        summary,
    })
}

async fn get_kb(State(app): State<Arc<AppState>>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        app.kb_bytes.clone(),
    )
        .into_response()
}

async fn healthz() -> &'static str {
    "ok"
}

async fn post_query(State(app): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    };
    match run_query(&app.kb, &req) {
        Ok(resp) => (
            [(header::CONTENT_TYPE, "application/json")],
            to_canonical_line(&resp),
        )
            .into_response(),
        Err(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.to_string()).into_response(),
    }
}

async fn ws_upgrade(State(app): State<Arc<AppState>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| serve_socket(app, socket))
}

async fn send_close(socket: &mut WebSocket, code: u16, reason: &'static str) {
    let _ = socket
        .send(Message::Close(Some(CloseFrame {
            code,
            reason: Utf8Bytes::from_static(reason),
        })))
        .await;
}

async fn serve_socket(app: Arc<AppState>, mut socket: WebSocket) {
    let hello = match tokio::time::timeout(HANDSHAKE_TIMEOUT, socket.recv()).await {
        Ok(Some(Ok(Message::Text(text)))) => parse_client_frame(text.as_str()),
        _ => Err(SessionError::ProtocolError("expected a hello frame".into())),
    };
    let hello = match hello {
        Ok(ClientFrame::Hello(h)) => h,
        Ok(ClientFrame::Publish(_)) => {
            let err = SessionError::ProtocolError("publish before hello".into());
            let _ = socket
                .send(Message::Text(frame_text(&err.to_frame()).into()))
                .await;
            return send_close(&mut socket, 1002, "protocol error").await;
        }
        Err(err) => {
            let _ = socket
                .send(Message::Text(frame_text(&err.to_frame()).into()))
                .await;
            return send_close(&mut socket, 1002, "protocol error").await;
        }
    };

    let (tx, mut rx) = mpsc::channel::<String>(app.config.queue_cap);
    let registered = {
        let mut sessions = app.sessions.lock().unwrap();
        let hub = sessions
            .entry(hello.session.clone())
            .or_insert_with(|| Hub {
                session: Session::new(
                    hello.session.clone(),
                    Arc::clone(&app.kb),
                    app.config.params,
                    app.config.session_cap,
                ),
                outboxes: BTreeMap::new(),
            });
        hub.session.register(hello.role).map(|(id, snapshot)| {
            let welcome = frame_text(&ServerFrame::Welcome {
                welcome: Welcome {
                    client_id: id.clone(),
                    snapshot,
                },
            });
            // Queued under the lock so no later event can overtake it.
            let _ = tx.try_send(welcome);
            hub.outboxes.insert(id.clone(), tx);
            id
        })
    };
    let client = match registered {
        Ok(id) => id,
        Err(err) => {
            let _ = socket
                .send(Message::Text(frame_text(&err.to_frame()).into()))
                .await;
            return send_close(&mut socket, 1013, "session full").await;
        }
    };
    tracing::info!(%client, session = %hello.session, role = ?hello.role, "client joined");

    let (mut sink, mut stream) = socket.split();
    let (done_tx, mut done_rx) = oneshot::channel::<()>();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                return;
            }
        }
        // Every sender is gone: either the reader finished or the queue
        // overflowed and the hub dropped us.
        let overflowed = done_rx.try_recv().is_err();
        let code = if overflowed { GOING_AWAY } else { 1000 };
        let _ = sink
            .send(Message::Close(Some(CloseFrame {
                code,
                reason: Utf8Bytes::from_static("bye"),
            })))
            .await;
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let mut sessions = app.sessions.lock().unwrap();
        let Some(hub) = sessions.get_mut(&hello.session) else {
            break;
        };
        if !hub.outboxes.contains_key(&client) {
            break;
        }
        match parse_client_frame(text.as_str()) {
            Ok(ClientFrame::Publish(kind)) => {
                match hub.session.publish(&client, kind, &now_rfc3339()) {
                    Ok(outcome) => {
                        hub.deliver(&client, &frame_text(&ServerFrame::Ack { ack: outcome.ack }));
                        for (event, recipients) in outcome.broadcasts {
                            let text = frame_text(&ServerFrame::Event(event));
                            for r in recipients {
                                hub.deliver(&r, &text);
                            }
                        }
                    }
                    Err(err) => hub.deliver(&client, &frame_text(&err.to_frame())),
                }
            }
            Ok(ClientFrame::Hello(_)) => {
                let err = SessionError::ProtocolError("duplicate hello".into());
                hub.deliver(&client, &frame_text(&err.to_frame()));
            }
            Err(err) => hub.deliver(&client, &frame_text(&err.to_frame())),
        }
    }

    let _ = done_tx.send(());
    {
        let mut sessions = app.sessions.lock().unwrap();
        if let Some(hub) = sessions.get_mut(&hello.session) {
            hub.outboxes.remove(&client);
            hub.session.unregister(&client);
        }
    }
    let _ = writer.await;
    tracing::info!(%client, "client left");
}

/// Routes for one loaded knowledge base.
pub fn router(kb: KnowledgeBase, config: ServerConfig) -> Router {
    let kb_bytes = save_knowledge_base(&kb);
    let ui_dir = config.ui_dir.clone();
    let state = Arc::new(AppState {
        kb: Arc::new(kb),
        kb_bytes,
        config,
        sessions: Mutex::new(HashMap::new()),
    });
    let router = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/kb", get(get_kb))
        .route("/healthz", get(healthz))
        .route("/query", post(post_query))
        .with_state(state);
    match ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// A bound, running server.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn http_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn ws_url(&self) -> String {
        format!("ws://{}/ws", self.addr)
    }

    /// Waits until the server stops on its own (it normally never does).
    pub async fn wait(mut self) -> std::io::Result<()> {
        let _keep_running = self.shutdown.take();
        (&mut self.handle)
            .await
            .unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.handle).await;
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        if self.shutdown.is_some() {
            self.handle.abort();
        }
    }
}

/// Binds `addr` and starts serving in the background.
pub async fn spawn(
    addr: &str,
    kb: KnowledgeBase,
    config: ServerConfig,
) -> std::io::Result<RunningServer> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let app = router(kb, config);
    // Small frames go out at once instead of waiting on delayed ACKs.
    let listener = listener.tap_io(|tcp| {
        if let Err(e) = tcp.set_nodelay(true) {
            tracing::debug!("cannot set TCP_NODELAY: {e}");
        }
    });
    let (tx, rx) = oneshot::channel::<()>();
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        handle,
    })
}
