//! Headless editor client: connects to a session, applies commands and
//! inbound events, and records the wire traffic it sees.

use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use groundlink_core::canonical::to_canonical_line;
use groundlink_core::editor::{parse_command, CommandError, EditorCommand, EditorState, USAGE};
use groundlink_core::model::{parse_knowledge_base, KnowledgeBase};
use groundlink_core::sync::{
    ClientId, ClientRole, EventKind, Hello, ServerFrame, SessionSnapshot, SyncEvent,
};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

/// How long a publish waits for its acknowledgement.
const ACK_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot connect to {url}: {message}")]
    Connect { url: String, message: String },
    #[error("connection closed{}", .0.as_deref().map(|r| format!(": {r}")).unwrap_or_default())]
    Closed(Option<String>),
    #[error("server rejected the request: {code}: {message}")]
    Rejected {
        code: String,
        message: String,
        field: Option<String>,
    },
    #[error("unexpected frame: {0}")]
    Unexpected(String),
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("knowledge base from server is invalid: {0}")]
    KnowledgeBase(String),
}

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

/// One frame as seen on the wire, for transcripts.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum WireRecord {
    Sent(Value),
    Received(ServerFrame),
}

impl WireRecord {
    /// Canonical transcript line. With `normalize`, `t_wall` becomes a fixed
    /// placeholder so transcripts can be compared byte for byte.
    pub fn to_line(&self, normalize: bool) -> String {
        let mut value = match self {
            Self::Sent(v) => json!({ "send": v }),
            Self::Received(f) => json!({ "recv": f }),
        };
        if normalize {
            normalize_t_wall(&mut value);
        }
        to_canonical_line(&value)
    }
}

fn normalize_t_wall(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, child) in map.iter_mut() {
                if k == "t_wall" {
                    *child = Value::String("<t_wall>".into());
                } else {
                    normalize_t_wall(child);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_t_wall),
        _ => {}
    }
}

/// A registered protocol connection.
pub struct SyncClient {
    socket: Socket,
    pub client_id: ClientId,
    pub welcome_snapshot: SessionSnapshot,
    pub wire: Vec<WireRecord>,
}

impl SyncClient {
    /// Connects to `ws_url` and performs the handshake.
    pub async fn connect(
        ws_url: &str,
        role: ClientRole,
        session: &str,
    ) -> Result<Self, ClientError> {
        let (socket, _) = tokio_tungstenite::connect_async_with_config(ws_url, None, true)
            .await
            .map_err(|e| ClientError::Connect {
                url: ws_url.to_string(),
                message: e.to_string(),
            })?;
        let mut client = Self {
            socket,
            client_id: ClientId(String::new()),
            welcome_snapshot: SessionSnapshot::default(),
            wire: Vec::new(),
        };
        let hello = json!({ "hello": Hello { role, session: session.to_string() } });
        client.send_value(hello).await?;
        match client.recv_timeout(ACK_TIMEOUT).await? {
            Some(ServerFrame::Welcome { welcome }) => {
                client.client_id = welcome.client_id;
                client.welcome_snapshot = welcome.snapshot;
                Ok(client)
            }
            Some(ServerFrame::Error { error }) => Err(ClientError::Rejected {
                code: error.code,
                message: error.message,
                field: error.field,
            }),
            Some(other) => Err(ClientError::Unexpected(format!("{other:?}"))),
            None => Err(ClientError::Timeout("welcome")),
        }
    }

    async fn send_value(&mut self, value: Value) -> Result<(), ClientError> {
        let text = to_canonical_line(&value);
        self.wire.push(WireRecord::Sent(value));
        self.socket
            .send(Message::text(text))
            .await
            .map_err(|e| ClientError::Closed(Some(e.to_string())))
    }

    /// Sends a publish frame for `kind`.
    pub async fn publish(&mut self, kind: &EventKind) -> Result<(), ClientError> {
        let value = serde_json::to_value(kind).expect("event kinds serialize");
        self.send_value(value).await
    }

    /// Sends raw text, bypassing client-side encoding.
    pub async fn send_raw(&mut self, text: &str) -> Result<(), ClientError> {
        self.socket
            .send(Message::text(text))
            .await
            .map_err(|e| ClientError::Closed(Some(e.to_string())))
    }

    /// Next server frame, `None` on timeout.
    pub async fn recv_timeout(
        &mut self,
        timeout: Duration,
    ) -> Result<Option<ServerFrame>, ClientError> {
        loop {
            let msg = match tokio::time::timeout(timeout, self.socket.next()).await {
                Err(_) => return Ok(None),
                Ok(None) => return Err(ClientError::Closed(None)),
                Ok(Some(Err(e))) => return Err(ClientError::Closed(Some(e.to_string()))),
                Ok(Some(Ok(m))) => m,
            };
            match msg {
                Message::Text(text) => {
                    let frame: ServerFrame = serde_json::from_str(text.as_str())
                        .map_err(|e| ClientError::Unexpected(format!("{e}: {text}")))?;
                    self.wire.push(WireRecord::Received(frame.clone()));
                    return Ok(Some(frame));
                }
                Message::Close(frame) => {
                    return Err(ClientError::Closed(
                        frame.map(|f| format!("{} {}", u16::from(f.code), f.reason)),
                    ))
                }
                _ => continue,
            }
        }
    }

    pub async fn close(mut self) {
        let _ = self.socket.close(None).await;
    }
}

/// Reads the knowledge base from a server's `GET /kb`.
pub async fn fetch_knowledge_base(http_url: &str) -> Result<KnowledgeBase, ClientError> {
    let url = format!("{}/kb", http_url.trim_end_matches('/'));
    let connect_err = |e: reqwest::Error| ClientError::Connect {
        url: url.clone(),
        message: e.to_string(),
    };
    let resp = reqwest::get(&url).await.map_err(connect_err)?;
    let resp = resp.error_for_status().map_err(connect_err)?;
    let bytes = resp.bytes().await.map_err(connect_err)?;
    parse_knowledge_base(&bytes).map_err(|e| ClientError::KnowledgeBase(e.to_string()))
}

/// `ws://host/ws` for an `http://host` base, and the reverse.
pub fn endpoints(server_url: &str) -> (String, String) {
    let trimmed = server_url.trim_end_matches('/');
    let (scheme, rest) = trimmed.split_once("://").unwrap_or(("http", trimmed));
    let host = rest.strip_suffix("/ws").unwrap_or(rest);
    let (http, ws) = match scheme {
        "https" | "wss" => ("https", "wss"),
        _ => ("http", "ws"),
    };
    (format!("{http}://{host}"), format!("{ws}://{host}/ws"))
}

/// Output of one executed command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutcome {
    /// The server-numbered copy of what this command published.
    pub published: Option<SyncEvent>,
    /// Lines the command prints (`cues`, `state`).
    pub output: Vec<String>,
    pub quit: bool,
}

/// Editor client: local scene state kept in step with a session.
pub struct EditorClient {
    pub conn: SyncClient,
    pub state: EditorState,
    /// Every event this client has folded, in order.
    pub events: Vec<SyncEvent>,
}

impl EditorClient {
    pub async fn connect(server_url: &str, session: &str) -> Result<Self, ClientError> {
        let (http, ws) = endpoints(server_url);
        let kb = fetch_knowledge_base(&http).await?;
        Self::connect_with(&ws, Arc::new(kb), ClientRole::Editor, session).await
    }

    /// Connects with an already loaded knowledge base.
    pub async fn connect_with(
        ws_url: &str,
        kb: Arc<KnowledgeBase>,
        role: ClientRole,
        session: &str,
    ) -> Result<Self, ClientError> {
        let conn = SyncClient::connect(ws_url, role, session).await?;
        let state = EditorState::new(kb, conn.client_id.clone(), conn.welcome_snapshot.clone());
        Ok(Self {
            conn,
            state,
            events: Vec::new(),
        })
    }

    /// Folds one inbound frame into local state.
    pub fn absorb(&mut self, frame: ServerFrame) -> Result<(), ClientError> {
        match frame {
            ServerFrame::Event(event) => {
                self.state.apply_remote(&event);
                self.events.push(event);
            }
            ServerFrame::Ack { ack } => {
                self.state.apply_ack(&ack);
                self.events.push(ack);
            }
            ServerFrame::Error { error } => {
                return Err(ClientError::Rejected {
                    code: error.code,
                    message: error.message,
                    field: error.field,
                })
            }
            ServerFrame::Welcome { .. } => {
                return Err(ClientError::Unexpected("second welcome".into()))
            }
        }
        Ok(())
    }

    /// Applies inbound frames until none arrives for `idle`.
    pub async fn settle(&mut self, idle: Duration) -> Result<(), ClientError> {
        while let Some(frame) = self.conn.recv_timeout(idle).await? {
            self.absorb(frame)?;
        }
        Ok(())
    }

    /// Applies frames that are already buffered, without waiting.
    pub async fn drain(&mut self) -> Result<(), ClientError> {
        self.settle(Duration::from_millis(0)).await
    }

    /// Publishes `kind` and waits for its acknowledgement and, for scene
    /// changes, the cue update that follows it.
    async fn publish_and_wait(&mut self, kind: EventKind) -> Result<SyncEvent, ClientError> {
        let wants_cues = kind.changes_scene();
        self.conn.publish(&kind).await?;
        let ack = loop {
            match self.conn.recv_timeout(ACK_TIMEOUT).await? {
                Some(ServerFrame::Ack { ack }) => {
                    self.state.apply_ack(&ack);
                    self.events.push(ack.clone());
                    break ack;
                }
                Some(frame) => self.absorb(frame)?,
                None => return Err(ClientError::Timeout("ack")),
            }
        };
        if wants_cues {
            loop {
                match self.conn.recv_timeout(ACK_TIMEOUT).await? {
                    Some(ServerFrame::Event(e)) if e.event_id == ack.event_id + 1 => {
                        self.state.apply_remote(&e);
                        self.events.push(e);
                        break;
                    }
                    Some(frame) => self.absorb(frame)?,
                    None => return Err(ClientError::Timeout("cue update")),
                }
            }
        }
        Ok(ack)
    }

    /// Runs one command: inbound events received so far are applied first,
    /// then the command, which publishes at most one event.
    pub async fn execute(&mut self, cmd: &EditorCommand) -> Result<CommandOutcome, ClientError> {
        self.drain().await?;
        let mut outcome = CommandOutcome::default();
        match cmd {
            EditorCommand::Cues => {
                let cues = self
                    .state
                    .cues
                    .as_ref()
                    .map(|c| serde_json::to_value(c).unwrap())
                    .unwrap_or(Value::Null);
                outcome
                    .output
                    .push(to_canonical_line(&json!({ "cues": cues })));
            }
            EditorCommand::State => {
                let state = json!({
                    "client_id": self.state.client_id,
                    "scene": self.state.scene,
                    "filter": self.state.filter,
                    "video_positions": self.state.video_positions,
                    "last_event_id": self.state.snapshot.last_event_id,
                });
                outcome
                    .output
                    .push(to_canonical_line(&json!({ "state": state })));
            }
            EditorCommand::Quit => outcome.quit = true,
            _ => {}
        }
        if let Some(kind) = self.state.apply_local(cmd)? {
            outcome.published = Some(self.publish_and_wait(kind).await?);
        }
        Ok(outcome)
    }

    /// Parses and executes one script line. Blank lines and comments do nothing.
    pub async fn execute_line(&mut self, line: &str) -> Result<CommandOutcome, ClientError> {
        match parse_command(line)? {
            Some(cmd) => self.execute(&cmd).await,
            None => Ok(CommandOutcome::default()),
        }
    }

    /// Wire transcript so far, one canonical line per frame.
    pub fn transcript(&self, normalize: bool) -> Vec<String> {
        self.conn
            .wire
            .iter()
            .map(|r| r.to_line(normalize))
            .collect()
    }

    pub async fn close(self) {
        self.conn.close().await;
    }
}

/// Usage text shown after a command error in interactive mode.
pub fn usage() -> &'static str {
    USAGE
}
