//! Wire protocol and per-session ordering point for cross-client sync.
//!
//! The transport (WebSocket server, test harnesses) owns connections and
//! queues; [`Session`] owns event numbering, fan-out decisions and the
//! folded session state. Every mutation goes through `&mut Session`, so a
//! single lock around it gives a total order on events.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{evaluate_scene, CueSet, EngineParams, SceneState};
use crate::model::{KnowledgeBase, PropertyValue, Vec3};
use crate::query::FilterSpec;

pub const DEFAULT_SESSION_CAP: usize = 64;
pub const DEFAULT_QUEUE_CAP: usize = 1024;
pub const DEFAULT_BIND: &str = "127.0.0.1:7340";
pub const DEFAULT_SESSION: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientRole {
    Editor,
    Dashboard,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub String);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Event payloads. Encoded adjacently as `"kind"` and `"payload"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    SelectObject {
        #[serde(default)]
        object_id: Option<String>,
    },
    TransformChanged {
        object_id: String,
        position: Vec3,
    },
    PropertyChanged {
        object_id: String,
        property: String,
        value: PropertyValue,
    },
    FilterChanged {
        filter: FilterSpec,
    },
    SeekVideo {
        meeting_id: String,
        t: f64,
    },
    EntrySelected {
        entry_id: String,
    },
    CueInteracted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zone_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraint_id: Option<String>,
    },
    CueSetUpdated {
        cue_set: CueSet,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SelectObject { .. } => "SelectObject",
            Self::TransformChanged { .. } => "TransformChanged",
            Self::PropertyChanged { .. } => "PropertyChanged",
            Self::FilterChanged { .. } => "FilterChanged",
            Self::SeekVideo { .. } => "SeekVideo",
            Self::EntrySelected { .. } => "EntrySelected",
            Self::CueInteracted { .. } => "CueInteracted",
            Self::CueSetUpdated { .. } => "CueSetUpdated",
        }
    }

    pub fn changes_scene(&self) -> bool {
        matches!(
            self,
            Self::TransformChanged { .. } | Self::PropertyChanged { .. }
        )
    }
}

/// Broadcast envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub event_id: u64,
    pub origin: ClientId,
    #[serde(flatten)]
    pub kind: EventKind,
    pub t_wall: String,
}

/// State obtained by folding every broadcast event of a session in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionSnapshot {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_entry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSpec>,
    #[serde(default)]
    pub video_positions: BTreeMap<String, f64>,
    #[serde(default)]
    pub scene: SceneState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue_set: Option<CueSet>,
    pub last_event_id: u64,
}

impl SessionSnapshot {
    /// Applies one event, last writer wins per field.
    pub fn apply(&mut self, event: &SyncEvent) {
        match &event.kind {
            EventKind::SelectObject { object_id } => {
                self.selection = object_id.clone();
                self.scene.put_selection(object_id.as_deref());
            }
            EventKind::TransformChanged {
                object_id,
                position,
            } => {
                self.scene.put_position(object_id, *position);
            }
            EventKind::PropertyChanged {
                object_id,
                property,
                value,
            } => {
                self.scene.put_property(object_id, property, value.clone());
            }
            EventKind::FilterChanged { filter } => self.filter = Some(filter.clone()),
            EventKind::SeekVideo { meeting_id, t } => {
                self.video_positions.insert(meeting_id.clone(), *t);
            }
            EventKind::EntrySelected { entry_id } => self.selected_entry = Some(entry_id.clone()),
            EventKind::CueInteracted { .. } => {}
            EventKind::CueSetUpdated { cue_set } => self.cue_set = Some(cue_set.clone()),
        }
        self.last_event_id = event.event_id;
    }
}

/// Left fold from an empty snapshot.
pub fn fold<'a>(events: impl IntoIterator<Item = &'a SyncEvent>) -> SessionSnapshot {
    fold_from(SessionSnapshot::default(), events)
}

pub fn fold_from<'a>(
    mut base: SessionSnapshot,
    events: impl IntoIterator<Item = &'a SyncEvent>,
) -> SessionSnapshot {
    for e in events {
        base.apply(e);
    }
    base
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub role: ClientRole,
    #[serde(default = "default_session")]
    pub session: String,
}

fn default_session() -> String {
    DEFAULT_SESSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welcome {
    pub client_id: ClientId,
    pub snapshot: SessionSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

/// Frames sent by the server. Events go out bare; the originator of a
/// publish gets its numbered event back inside an `ack` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerFrame {
    Welcome { welcome: Welcome },
    Ack { ack: SyncEvent },
    Error { error: ErrorBody },
    Event(SyncEvent),
}

/// Frames sent by clients.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientFrame {
    Hello(Hello),
    Publish(EventKind),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("session is full ({0} clients)")]
    SessionFull(usize),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("unknown client `{0}`")]
    UnknownClient(ClientId),
    #[error("invalid payload field `{0}`")]
    PayloadInvalid(String),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::SessionFull(_) => "SessionFull",
            Self::ProtocolError(_) => "ProtocolError",
            Self::UnknownClient(_) => "UnknownClient",
            Self::PayloadInvalid(_) => "PayloadInvalid",
        }
    }

    pub fn to_frame(&self) -> ServerFrame {
        let field = match self {
            Self::PayloadInvalid(f) => Some(f.clone()),
            _ => None,
        };
        ServerFrame::Error {
            error: ErrorBody {
                code: self.code().to_string(),
                message: self.to_string(),
                field,
            },
        }
    }
}

fn strip_payload_prefix(path: &str) -> String {
    path.strip_prefix("payload.").unwrap_or(path).to_string()
}

/// Decodes one client text frame. Client-supplied `origin`, `event_id` and
/// `t_wall` are ignored.
pub fn parse_client_frame(text: &str) -> Result<ClientFrame, SessionError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| SessionError::ProtocolError(format!("malformed JSON: {e}")))?;
    let Value::Object(mut map) = value else {
        return Err(SessionError::ProtocolError(
            "frame must be a JSON object".into(),
        ));
    };
    if let Some(hello) = map.remove("hello") {
        return serde_json::from_value(hello)
            .map(ClientFrame::Hello)
            .map_err(|e| SessionError::ProtocolError(format!("bad hello: {e}")));
    }
    let Some(kind) = map.remove("kind") else {
        return Err(SessionError::ProtocolError(
            "expected `hello` or `kind`".into(),
        ));
    };
    let payload = map
        .remove("payload")
        .unwrap_or_else(|| Value::Object(Default::default()));
    let envelope = serde_json::json!({ "kind": kind, "payload": payload });
    serde_path_to_error::deserialize::<_, EventKind>(envelope)
        .map(ClientFrame::Publish)
        .map_err(|e| {
            let path = e.path().to_string();
            if path == "." || path.is_empty() || path == "kind" {
                SessionError::PayloadInvalid("kind".into())
            } else {
                SessionError::PayloadInvalid(strip_payload_prefix(&path))
            }
        })
}

/// Who should receive which frame after a publish.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishOutcome {
    /// Numbered copy of the published event, for the originator only.
    pub ack: SyncEvent,
    /// Events in broadcast order with their recipients.
    pub broadcasts: Vec<(SyncEvent, Vec<ClientId>)>,
}

/// One synchronization session: registered clients, event numbering and the
/// folded state late joiners receive.
#[derive(Debug)]
pub struct Session {
    id: String,
    kb: Arc<KnowledgeBase>,
    params: EngineParams,
    cap: usize,
    next_client: u64,
    clients: BTreeMap<ClientId, ClientRole>,
    genesis: SessionSnapshot,
    snapshot: SessionSnapshot,
}

impl Session {
    /// Starts with every object at its bootstrap position and the cues for
    /// that layout.
    pub fn new(
        id: impl Into<String>,
        kb: Arc<KnowledgeBase>,
        params: EngineParams,
        cap: usize,
    ) -> Self {
        let scene = SceneState::bootstrap(&kb);
        let cue_set = evaluate_scene(&scene, &kb, &params).ok();
        let genesis = SessionSnapshot {
            scene,
            cue_set,
            ..SessionSnapshot::default()
        };
        Self {
            id: id.into(),
            kb,
            params,
            cap,
            next_client: 0,
            clients: BTreeMap::new(),
            snapshot: genesis.clone(),
            genesis,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn knowledge_base(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    /// Snapshot at event 0; folding the broadcast log onto it reproduces
    /// [`Session::snapshot`].
    pub fn genesis(&self) -> &SessionSnapshot {
        &self.genesis
    }

    pub fn snapshot(&self) -> &SessionSnapshot {
        &self.snapshot
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn role(&self, client: &ClientId) -> Option<ClientRole> {
        self.clients.get(client).copied()
    }

    pub fn register(
        &mut self,
        role: ClientRole,
    ) -> Result<(ClientId, SessionSnapshot), SessionError> {
        if self.clients.len() >= self.cap {
            return Err(SessionError::SessionFull(self.cap));
        }
        self.next_client += 1;
        let id = ClientId(format!("c-{}", self.next_client));
        self.clients.insert(id.clone(), role);
        Ok((id, self.snapshot.clone()))
    }

    pub fn unregister(&mut self, client: &ClientId) -> bool {
        self.clients.remove(client).is_some()
    }

    fn validate(&self, kind: &EventKind) -> Result<(), SessionError> {
        let kb = &self.kb;
        let invalid = |f: &str| Err(SessionError::PayloadInvalid(f.to_string()));
        let known_object = |id: &str| kb.object(id).is_some();
        match kind {
            EventKind::SelectObject {
                object_id: Some(id),
            } if !known_object(id) => invalid("object_id"),
            EventKind::SelectObject { .. } => Ok(()),
            EventKind::TransformChanged {
                object_id,
                position,
            } => {
                if !known_object(object_id) {
                    return invalid("object_id");
                }
                match position.first_non_finite() {
                    Some(axis) => invalid(&format!("position.{axis}")),
                    None => Ok(()),
                }
            }
            EventKind::PropertyChanged {
                object_id,
                property,
                value,
            } => {
                if !known_object(object_id) {
                    invalid("object_id")
                } else if property.trim().is_empty() {
                    invalid("property")
                } else if !value.is_finite() {
                    invalid("value")
                } else {
                    Ok(())
                }
            }
            EventKind::FilterChanged { filter } => {
                filter.validate(kb).or_else(|_| invalid("filter"))
            }
            EventKind::SeekVideo { meeting_id, t } => match kb.meeting(meeting_id) {
                None => invalid("meeting_id"),
                Some(_) if !(t.is_finite() && *t >= 0.0) => invalid("t"),
                Some(_) => Ok(()),
            },
            EventKind::EntrySelected { entry_id } if kb.entry(entry_id).is_none() => {
                invalid("entry_id")
            }
            EventKind::EntrySelected { .. } => Ok(()),
            EventKind::CueInteracted {
                zone_id,
                constraint_id,
            } => match (zone_id, constraint_id) {
                (Some(z), None) if kb.zone(z).is_some() => Ok(()),
                (None, Some(c)) if kb.style_constraint(c).is_some() => Ok(()),
                (Some(_), None) => invalid("zone_id"),
                (None, Some(_)) => invalid("constraint_id"),
                _ => invalid("zone_id"),
            },
            EventKind::CueSetUpdated { .. } => invalid("kind"),
        }
    }

    fn next_event(&mut self, origin: &ClientId, kind: EventKind, t_wall: &str) -> SyncEvent {
        let event = SyncEvent {
            event_id: self.snapshot.last_event_id + 1,
            origin: origin.clone(),
            kind,
            t_wall: t_wall.to_string(),
        };
        self.snapshot.apply(&event);
        event
    }

    /// Numbers and folds `kind`, returning the fan-out: everyone but the
    /// originator gets the event; scene changes add a server-computed
    /// `CueSetUpdated` for every client including the originator.
    pub fn publish(
        &mut self,
        client: &ClientId,
        kind: EventKind,
        t_wall: &str,
    ) -> Result<PublishOutcome, SessionError> {
        if !self.clients.contains_key(client) {
            return Err(SessionError::UnknownClient(client.clone()));
        }
        self.validate(&kind)?;
        let recompute = kind.changes_scene();
        let event = self.next_event(client, kind, t_wall);
        let others: Vec<ClientId> = self
            .clients
            .keys()
            .filter(|c| *c != client)
            .cloned()
            .collect();
        let mut broadcasts = vec![(event.clone(), others)];
        if recompute {
            let cue_set = evaluate_scene(&self.snapshot.scene, &self.kb, &self.params)
                .map_err(|e| SessionError::PayloadInvalid(e.to_string()))?;
            let cue_event = self.next_event(client, EventKind::CueSetUpdated { cue_set }, t_wall);
            broadcasts.push((cue_event, self.clients.keys().cloned().collect()));
        }
        Ok(PublishOutcome {
            ack: event,
            broadcasts,
        })
    }
}
