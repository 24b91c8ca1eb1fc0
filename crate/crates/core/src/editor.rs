//! Headless editor: script commands, local scene state, and the rules for
//! applying local changes (emit exactly one event) versus remote events
//! (never emit).

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{CueSet, SceneState};
use crate::model::{KnowledgeBase, PropertyValue, Rgb, Vec3};
use crate::pipeline::lexicon::css_color;
use crate::query::FilterSpec;
use crate::sync::{ClientId, EventKind, SessionSnapshot, SyncEvent};

#[derive(Debug, Clone, PartialEq)]
pub enum EditorCommand {
    Select(Option<String>),
    Move {
        object_id: String,
        position: Vec3,
    },
    Set {
        object_id: String,
        property: String,
        value: PropertyValue,
    },
    Seek {
        meeting_id: String,
        t: f64,
    },
    Filter(FilterSpec),
    Entry(String),
    InteractZone(String),
    InteractConstraint(String),
    Cues,
    State,
    Quit,
}

pub const USAGE: &str = "commands:
  select <object_id|none>
  move <object_id> <x> <y> <z>
  set <object_id> <property> <value>   (value: rgb(r,g,b) | #rrggbb | color name | number | text)
  seek <meeting_id> <seconds>
  filter <FilterSpec JSON>
  entry <entry_id>
  interact zone|constraint <id>
  cues | state | quit";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("unknown command `{0}`")]
    Unknown(String),
    #[error("`{command}`: {message}")]
    Usage { command: String, message: String },
    #[error("unknown {what} `{id}`")]
    UnknownId { what: &'static str, id: String },
}

fn usage(command: &str, message: impl Into<String>) -> CommandError {
    CommandError::Usage {
        command: command.to_string(),
        message: message.into(),
    }
}

fn number(command: &str, s: &str) -> Result<f64, CommandError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| usage(command, format!("`{s}` is not a finite number")))
}

/// Parses a property value literal.
pub fn parse_value(s: &str) -> PropertyValue {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if let Some(inner) = lower.strip_prefix("rgb(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<Option<u8>> = inner.split(',').map(|p| p.trim().parse().ok()).collect();
        if let [Some(r), Some(g), Some(b)] = parts[..] {
            return PropertyValue::Color(Rgb::new(r, g, b));
        }
    }
    if let Some(hex) = lower.strip_prefix('#') {
        if hex.len() == 6 {
            if let Ok(v) = u32::from_str_radix(hex, 16) {
                return PropertyValue::Color(Rgb::new((v >> 16) as u8, (v >> 8) as u8, v as u8));
            }
        }
    }
    if let Some(c) = css_color(&lower) {
        return PropertyValue::Color(c);
    }
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() {
            return PropertyValue::Scalar(v);
        }
    }
    PropertyValue::Text(t.trim_matches('"').to_string())
}

/// Parses one script line. Blank lines and `#` comments yield `None`.
pub fn parse_command(line: &str) -> Result<Option<EditorCommand>, CommandError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let args: Vec<&str> = rest.split_whitespace().collect();
    let command = match cmd {
        "select" => match args.as_slice() {
            [] | ["none"] => EditorCommand::Select(None),
            [id] => EditorCommand::Select(Some(id.to_string())),
            _ => return Err(usage(cmd, "select <object_id|none>")),
        },
        "move" => match args.as_slice() {
            [id, x, y, z] => EditorCommand::Move {
                object_id: id.to_string(),
                position: Vec3::new(number(cmd, x)?, number(cmd, y)?, number(cmd, z)?),
            },
            _ => return Err(usage(cmd, "move <object_id> <x> <y> <z>")),
        },
        "set" => {
            let mut parts = rest.splitn(3, char::is_whitespace);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(id), Some(prop), Some(value))
                    if !id.is_empty() && !value.trim().is_empty() =>
                {
                    EditorCommand::Set {
                        object_id: id.to_string(),
                        property: prop.to_string(),
                        value: parse_value(value),
                    }
                }
                _ => return Err(usage(cmd, "set <object_id> <property> <value>")),
            }
        }
        "seek" => match args.as_slice() {
            [m, t] => EditorCommand::Seek {
                meeting_id: m.to_string(),
                t: number(cmd, t)?,
            },
            _ => return Err(usage(cmd, "seek <meeting_id> <seconds>")),
        },
        "filter" => {
            let spec = if rest.is_empty() {
                FilterSpec::default()
            } else {
                serde_json::from_str(rest).map_err(|e| usage(cmd, e.to_string()))?
            };
            EditorCommand::Filter(spec)
        }
        "entry" => match args.as_slice() {
            [id] => EditorCommand::Entry(id.to_string()),
            _ => return Err(usage(cmd, "entry <entry_id>")),
        },
        "interact" => match args.as_slice() {
            ["zone", id] => EditorCommand::InteractZone(id.to_string()),
            ["constraint", id] => EditorCommand::InteractConstraint(id.to_string()),
            _ => return Err(usage(cmd, "interact zone|constraint <id>")),
        },
        "cues" => EditorCommand::Cues,
        "state" => EditorCommand::State,
        "quit" | "exit" => EditorCommand::Quit,
        other => return Err(CommandError::Unknown(other.to_string())),
    };
    Ok(Some(command))
}

/// Local view of one editor client.
#[derive(Debug, Clone)]
pub struct EditorState {
    kb: Arc<KnowledgeBase>,
    pub client_id: ClientId,
    /// Scene as this editor sees it.
    pub scene: SceneState,
    pub filter: Option<FilterSpec>,
    pub video_positions: BTreeMap<String, f64>,
    pub cues: Option<CueSet>,
    /// Fold of every event this client has seen, its own included.
    pub snapshot: SessionSnapshot,
    /// Local mutations that produced an outbound event.
    pub emitted: u64,
}

impl EditorState {
    pub fn new(kb: Arc<KnowledgeBase>, client_id: ClientId, snapshot: SessionSnapshot) -> Self {
        Self {
            kb,
            client_id,
            scene: snapshot.scene.clone(),
            filter: snapshot.filter.clone(),
            video_positions: snapshot.video_positions.clone(),
            cues: snapshot.cue_set.clone(),
            snapshot,
            emitted: 0,
        }
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    fn object(&self, id: &str) -> Result<(), CommandError> {
        self.kb
            .object(id)
            .map(|_| ())
            .ok_or_else(|| CommandError::UnknownId {
                what: "object",
                id: id.to_string(),
            })
    }

    /// Applies a local command. Returns the single event to publish when the
    /// command changed local state, `None` otherwise.
    pub fn apply_local(&mut self, cmd: &EditorCommand) -> Result<Option<EventKind>, CommandError> {
        let kb = Arc::clone(&self.kb);
        let event = match cmd {
            EditorCommand::Select(id) => {
                if let Some(id) = id {
                    self.object(id)?;
                }
                if self.scene.selected_object == *id {
                    return Ok(None);
                }
                self.scene.put_selection(id.as_deref());
                EventKind::SelectObject {
                    object_id: id.clone(),
                }
            }
            EditorCommand::Move {
                object_id,
                position,
            } => {
                self.object(object_id)?;
                if self.scene.position(object_id) == Some(*position) {
                    return Ok(None);
                }
                self.scene.put_position(object_id, *position);
                EventKind::TransformChanged {
                    object_id: object_id.clone(),
                    position: *position,
                }
            }
            EditorCommand::Set {
                object_id,
                property,
                value,
            } => {
                self.object(object_id)?;
                if self.scene.property(object_id, property) == Some(value) {
                    return Ok(None);
                }
                self.scene.put_property(object_id, property, value.clone());
                EventKind::PropertyChanged {
                    object_id: object_id.clone(),
                    property: property.clone(),
                    value: value.clone(),
                }
            }
            EditorCommand::Seek { meeting_id, t } => {
                if kb.meeting(meeting_id).is_none() {
                    return Err(CommandError::UnknownId {
                        what: "meeting",
                        id: meeting_id.clone(),
                    });
                }
                if self.video_positions.get(meeting_id) == Some(t) {
                    return Ok(None);
                }
                self.video_positions.insert(meeting_id.clone(), *t);
                EventKind::SeekVideo {
                    meeting_id: meeting_id.clone(),
                    t: *t,
                }
            }
            EditorCommand::Filter(spec) => {
                spec.validate(&kb)
                    .map_err(|e| usage("filter", e.to_string()))?;
                if self.filter.as_ref() == Some(spec) {
                    return Ok(None);
                }
                self.filter = Some(spec.clone());
                EventKind::FilterChanged {
                    filter: spec.clone(),
                }
            }
            EditorCommand::Entry(id) => {
                if kb.entry(id).is_none() {
                    return Err(CommandError::UnknownId {
                        what: "entry",
                        id: id.clone(),
                    });
                }
                EventKind::EntrySelected {
                    entry_id: id.clone(),
                }
            }
            EditorCommand::InteractZone(id) => {
                if kb.zone(id).is_none() {
                    return Err(CommandError::UnknownId {
                        what: "zone",
                        id: id.clone(),
                    });
                }
                EventKind::CueInteracted {
                    zone_id: Some(id.clone()),
                    constraint_id: None,
                }
            }
            EditorCommand::InteractConstraint(id) => {
                if kb.style_constraint(id).is_none() {
                    return Err(CommandError::UnknownId {
                        what: "constraint",
                        id: id.clone(),
                    });
                }
                EventKind::CueInteracted {
                    zone_id: None,
                    constraint_id: Some(id.clone()),
                }
            }
            EditorCommand::Cues | EditorCommand::State | EditorCommand::Quit => return Ok(None),
        };
        self.emitted += 1;
        Ok(Some(event))
    }

    /// Records the server's numbered copy of an event this client published.
    /// Re-applying it keeps local state in server order when a concurrent
    /// remote change was numbered earlier but arrived after the local edit.
    pub fn apply_ack(&mut self, event: &SyncEvent) {
        self.snapshot.apply(event);
        if !matches!(event.kind, EventKind::EntrySelected { .. }) {
            self.mirror(event);
        }
    }

    /// Applies an inbound event. Never produces outbound traffic.
    pub fn apply_remote(&mut self, event: &SyncEvent) {
        self.snapshot.apply(event);
        self.mirror(event);
    }

    fn mirror(&mut self, event: &SyncEvent) {
        match &event.kind {
            EventKind::SelectObject { object_id } => self.scene.put_selection(object_id.as_deref()),
            EventKind::TransformChanged {
                object_id,
                position,
            } => self.scene.put_position(object_id, *position),
            EventKind::PropertyChanged {
                object_id,
                property,
                value,
            } => self.scene.put_property(object_id, property, value.clone()),
            EventKind::FilterChanged { filter } => self.filter = Some(filter.clone()),
            EventKind::SeekVideo { meeting_id, t } => {
                self.video_positions.insert(meeting_id.clone(), *t);
            }
            EventKind::EntrySelected { entry_id } => {
                let target = self
                    .kb
                    .entry(entry_id)
                    .and_then(|e| e.object_ids.first())
                    .cloned();
                if let Some(object_id) = target {
                    self.scene.put_selection(Some(&object_id));
                }
            }
            EventKind::CueInteracted { .. } => {}
            EventKind::CueSetUpdated { cue_set } => self.cues = Some(cue_set.clone()),
        }
    }
}


#[cfg(test)]
mod state_tests {
    use super::*;
    use crate::engine::EngineParams;
    use crate::sync::{ClientRole, Session};
    use crate::testkit::sample;

    fn editor() -> (Session, EditorState) {
        let kb = Arc::new(sample());
        let mut session = Session::new("s", Arc::clone(&kb), EngineParams::default(), 4);
        let (id, snapshot) = session.register(ClientRole::Editor).unwrap();
        (session, EditorState::new(kb, id, snapshot))
    }

    fn remote(id: u64, kind: EventKind) -> SyncEvent {
        SyncEvent {
            event_id: id,
            origin: ClientId("c-9".into()),
            kind,
            t_wall: "w".into(),
        }
    }

    #[test]
    fn local_changes_emit_once_and_repeats_emit_nothing() {
        let (_, mut ed) = editor();
        let mv = EditorCommand::Move {
            object_id: "boat".into(),
            position: Vec3::new(1.0, 0.0, 0.0),
        };
        assert!(matches!(
            ed.apply_local(&mv),
            Ok(Some(EventKind::TransformChanged { .. }))
        ));
        assert_eq!(ed.apply_local(&mv), Ok(None));
        assert_eq!(ed.apply_local(&EditorCommand::Cues), Ok(None));
        assert_eq!(ed.emitted, 1);
        let ghost = EditorCommand::Select(Some("raft".into()));
        assert!(matches!(
            ed.apply_local(&ghost),
            Err(CommandError::UnknownId { .. })
        ));
        assert_eq!(ed.emitted, 1);
    }

    #[test]
    fn remote_events_update_state_without_emitting() {
        let (_, mut ed) = editor();
        ed.apply_remote(&remote(
            1,
            EventKind::TransformChanged {
                object_id: "tent".into(),
                position: Vec3::new(3.0, 0.0, 3.0),
            },
        ));
        ed.apply_remote(&remote(
            2,
            EventKind::EntrySelected {
                entry_id: "e2".into(),
            },
        ));
        assert_eq!(ed.scene.position("tent"), Some(Vec3::new(3.0, 0.0, 3.0)));
        assert_eq!(
            ed.scene.selected_object.as_deref(),
            Some("tent"),
            "entry selection selects its object"
        );
        assert_eq!(ed.snapshot.last_event_id, 2);
        assert_eq!(ed.emitted, 0);
    }

    #[test]
    fn acks_restore_server_order() {
        let (mut session, mut ed) = editor();
        let (other, _) = session.register(ClientRole::Editor).unwrap();
        let here = Vec3::new(1.0, 0.0, 0.0);
        let there = Vec3::new(9.0, 0.0, 0.0);
        // The other editor's move is numbered first but arrives after the local edit.
        let theirs = session
            .publish(
                &other,
                EventKind::TransformChanged {
                    object_id: "boat".into(),
                    position: there,
                },
                "w",
            )
            .unwrap();
        let kind = ed
            .apply_local(&EditorCommand::Move {
                object_id: "boat".into(),
                position: here,
            })
            .unwrap()
            .unwrap();
        let mine = session.publish(&ed.client_id.clone(), kind, "w").unwrap();
        for (e, _) in &theirs.broadcasts {
            ed.apply_remote(e);
        }
        ed.apply_ack(&mine.ack);
        assert_eq!(ed.scene.position("boat"), Some(here));
        assert_eq!(
            ed.scene.position("boat"),
            session.snapshot().scene.position("boat")
        );
    }
}
