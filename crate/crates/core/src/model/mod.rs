//! Knowledge-base data model.
//!
//! A [`KnowledgeBase`] stores meetings, contributors, scene objects, the
//! decisions and comments extracted from meetings, and the zones and style
//! constraints those entries produced. Every other module treats it as
//! read-only.

mod io;
mod validate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use io::{
    canonicalize, load_knowledge_base, parse_knowledge_base, save_knowledge_base, LoadError,
    SUPPORTED_VERSION,
};
pub use validate::{validate_references, Violation, ViolationCode};

/// A point in scene space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ORIGIN: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Name of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        if !self.x.is_finite() {
            Some("x")
        } else if !self.y.is_finite() {
            Some("y")
        } else if !self.z.is_finite() {
            Some("z")
        } else {
            None
        }
    }
}

/// Movie department a zone, contributor or object belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum DepartmentTag {
    Camera,
    Lighting,
    Director,
    Effect,
    Other(String),
}

impl From<String> for DepartmentTag {
    fn from(s: String) -> Self {
        match s.to_ascii_lowercase().as_str() {
            "camera" => Self::Camera,
            "lighting" => Self::Lighting,
            "director" => Self::Director,
            "effect" => Self::Effect,
            other => Self::Other(other.to_string()),
        }
    }
}

impl From<DepartmentTag> for String {
    fn from(d: DepartmentTag) -> Self {
        d.as_str().to_string()
    }
}

impl DepartmentTag {
    pub fn as_str(&self) -> &str {
        match self {
            Self::Camera => "camera",
            Self::Lighting => "lighting",
            Self::Director => "director",
            Self::Effect => "effect",
            Self::Other(s) => s,
        }
    }
}

impl fmt::Display for DepartmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recorded position of an object during a meeting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSample {
    pub meeting_id: String,
    pub t: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub object_id: String,
    pub display_name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub department: Option<DepartmentTag>,
    #[serde(default)]
    pub position_history: Vec<PositionSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contributor {
    pub contributor_id: String,
    pub name: String,
    pub role: String,
    pub department: DepartmentTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meeting {
    pub meeting_id: String,
    pub title: String,
    /// Free-form production phase label, e.g. "pre-production".
    pub phase: String,
    /// ISO-8601 date or date-time.
    pub date: String,
    /// Seconds.
    pub duration: f64,
    pub media_ref: String,
}

impl Meeting {
    pub fn date_key(&self) -> Option<NaiveDateTime> {
        parse_iso_date(&self.date)
    }
}

/// Parses an ISO-8601 calendar date or date-time. Offsets are dropped after
/// conversion to UTC.
pub fn parse_iso_date(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S%.f",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

/// The slice of a meeting recording an entry was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeetingSegment {
    pub meeting_id: String,
    pub t_start: f64,
    pub t_end: f64,
    pub media_ref: String,
    /// Disambiguates entries whose spans coincide exactly.
    #[serde(default)]
    pub ordinal: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Decision,
    Comment,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Decision => "decision",
            Self::Comment => "comment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agreer {
    pub contributor_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remark: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub entry_id: String,
    pub kind: EntryKind,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default)]
    pub object_ids: Vec<String>,
    pub editor: String,
    #[serde(default)]
    pub agreers: Vec<Agreer>,
    pub segment: MeetingSegment,
    #[serde(default)]
    pub linked_constraint_ids: Vec<String>,
    pub confidence: f64,
    pub needs_review: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Encouragement,
    Restriction,
}

impl ZoneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Encouragement => "encouragement",
            Self::Restriction => "restriction",
        }
    }
}

/// Circular region on the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub zone_id: String,
    pub kind: ZoneKind,
    pub center: Vec3,
    pub radius: f64,
    pub department: DepartmentTag,
    /// Empty means the zone applies to every movable object.
    #[serde(default)]
    pub target_object_ids: Vec<String>,
    pub entry_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyValue {
    Color(Rgb),
    Scalar(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Color,
    Scalar,
    Text,
}

impl PropertyValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            Self::Color(_) => ValueKind::Color,
            Self::Scalar(_) => ValueKind::Scalar,
            Self::Text(_) => ValueKind::Text,
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Self::Scalar(v) if !v.is_finite())
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Color(c) => write!(f, "rgb({},{},{})", c.r, c.g, c.b),
            Self::Scalar(v) => write!(f, "{v}"),
            Self::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleConstraint {
    pub constraint_id: String,
    pub object_id: String,
    /// Property path such as `material.color` or `opacity`.
    pub property: String,
    pub expected: PropertyValue,
    /// Max per-channel delta for colors, absolute delta for scalars.
    pub tolerance: f64,
    pub message: String,
    pub entry_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub version: String,
    pub project_id: String,
    pub meetings: Vec<Meeting>,
    pub contributors: Vec<Contributor>,
    pub scene_objects: Vec<SceneObject>,
    pub entries: Vec<Entry>,
    pub zones: Vec<Zone>,
    pub style_constraints: Vec<StyleConstraint>,
    /// Unknown top-level fields, kept for round-trips.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Undated meetings sort after dated ones.
type MeetingKey = (bool, Option<NaiveDateTime>);

fn meeting_key(m: Option<&Meeting>) -> MeetingKey {
    let date = m.and_then(Meeting::date_key);
    (date.is_none(), date)
}

fn entry_order(key: impl Fn(&str) -> MeetingKey, a: &Entry, b: &Entry) -> Ordering {
    key(&a.segment.meeting_id)
        .cmp(&key(&b.segment.meeting_id))
        .then_with(|| a.segment.meeting_id.cmp(&b.segment.meeting_id))
        .then(a.segment.t_start.total_cmp(&b.segment.t_start))
        .then(a.segment.t_end.total_cmp(&b.segment.t_end))
        .then(a.segment.ordinal.cmp(&b.segment.ordinal))
        .then_with(|| a.entry_id.cmp(&b.entry_id))
}

fn sample_order(
    key: impl Fn(&str) -> MeetingKey,
    a: &PositionSample,
    b: &PositionSample,
) -> Ordering {
    key(&a.meeting_id)
        .cmp(&key(&b.meeting_id))
        .then_with(|| a.meeting_id.cmp(&b.meeting_id))
        .then(a.t.total_cmp(&b.t))
}

impl KnowledgeBase {
    pub fn empty(project_id: impl Into<String>) -> Self {
        Self {
            version: SUPPORTED_VERSION.to_string(),
            project_id: project_id.into(),
            meetings: Vec::new(),
            contributors: Vec::new(),
            scene_objects: Vec::new(),
            entries: Vec::new(),
            zones: Vec::new(),
            style_constraints: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn meeting(&self, id: &str) -> Option<&Meeting> {
        self.meetings.iter().find(|m| m.meeting_id == id)
    }

    pub fn contributor(&self, id: &str) -> Option<&Contributor> {
        self.contributors.iter().find(|c| c.contributor_id == id)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.scene_objects.iter().find(|o| o.object_id == id)
    }

    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.entry_id == id)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.zone_id == id)
    }

    pub fn style_constraint(&self, id: &str) -> Option<&StyleConstraint> {
        self.style_constraints
            .iter()
            .find(|c| c.constraint_id == id)
    }

    /// Chronological entry ordering: meeting date, then segment start.
    pub fn compare_entries(&self, a: &Entry, b: &Entry) -> Ordering {
        entry_order(|id| meeting_key(self.meeting(id)), a, b)
    }

    /// Puts every collection in canonical order. Idempotent.
    pub fn normalize(&mut self) {
        self.meetings
            .sort_by_cached_key(|m| (meeting_key(Some(m)), m.meeting_id.clone()));
        self.contributors
            .sort_by(|a, b| a.contributor_id.cmp(&b.contributor_id));
        self.scene_objects
            .sort_by(|a, b| a.object_id.cmp(&b.object_id));
        let order: BTreeMap<&str, MeetingKey> = self
            .meetings
            .iter()
            .map(|m| (m.meeting_id.as_str(), meeting_key(Some(m))))
            .collect();
        let missing = meeting_key(None);
        for obj in &mut self.scene_objects {
            obj.position_history
                .sort_by(|a, b| sample_order(|id| *order.get(id).unwrap_or(&missing), a, b));
        }
        for e in &mut self.entries {
            e.object_ids.sort();
            e.object_ids.dedup();
            e.linked_constraint_ids.sort();
            e.linked_constraint_ids.dedup();
        }
        self.entries
            .sort_by(|a, b| entry_order(|id| *order.get(id).unwrap_or(&missing), a, b));
        for z in &mut self.zones {
            z.target_object_ids.sort();
            z.target_object_ids.dedup();
            z.entry_ids.sort();
            z.entry_ids.dedup();
        }
        self.zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
        for c in &mut self.style_constraints {
            c.entry_ids.sort();
            c.entry_ids.dedup();
        }
        self.style_constraints
            .sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
    }

    /// Last recorded position per object, in canonical history order.
    pub fn last_known_position(&self, object_id: &str) -> Option<Vec3> {
        let obj = self.object(object_id)?;
        let mut hist: Vec<&PositionSample> = obj.position_history.iter().collect();
        hist.sort_by(|a, b| sample_order(|id| meeting_key(self.meeting(id)), a, b));
        hist.last().map(|s| s.position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::sample;

    #[test]
    fn iso_dates() {
        assert!(parse_iso_date("2026-01-05").is_some());
        assert!(parse_iso_date("2026-01-05T10:00:00Z").is_some());
        assert_eq!(
            parse_iso_date("2026-01-05T12:00:00+02:00"),
            parse_iso_date("2026-01-05T10:00:00Z"),
            "offsets convert to UTC"
        );
        assert!(parse_iso_date("05/01/2026").is_none());
    }

    #[test]
    fn normalize_is_idempotent_and_orders_chronologically() {
        let mut kb = sample();
        kb.entries.reverse();
        kb.meetings.reverse();
        kb.scene_objects[0].position_history.reverse();
        kb.entries[0].object_ids = vec!["tent".into(), "boat".into(), "tent".into()];
        kb.normalize();
        let ids: Vec<&str> = kb.entries.iter().map(|e| e.entry_id.as_str()).collect();
        assert_eq!(ids, ["e1", "e2", "e3"]);
        assert_eq!(kb.meetings[0].meeting_id, "m1");
        assert_eq!(kb.entries[2].object_ids, ["boat", "tent"]);
        let once = kb.clone();
        kb.normalize();
        assert_eq!(kb, once);
    }

    #[test]
    fn last_known_position_follows_meeting_order() {
        let kb = sample();
        assert_eq!(
            kb.last_known_position("boat"),
            Some(Vec3::new(5.0, 0.0, 0.0))
        );
        assert_eq!(kb.last_known_position("tent"), None);
    }

    #[test]
    fn department_tags_keep_unknown_labels() {
        assert_eq!(
            DepartmentTag::from("Camera".to_string()),
            DepartmentTag::Camera
        );
        assert_eq!(DepartmentTag::from("art".to_string()).as_str(), "art");
    }
}
