//! Builds a knowledge base from meeting transcripts, timestamped scene-edit
//! logs and annotation events.
//!
//! Stages, per meeting: parse the transcript, classify each utterance
//! (decision / comment / none and its polarity), link it to scene objects by
//! name, align it with nearby edits of those objects, detect agreement in the
//! following utterances, then emit entries, zones and style constraints.
//! Low-confidence output is kept and flagged `needs_review`.

mod align;
mod build;
mod classify;
mod inputs;
pub mod lexicon;
mod link;
mod review;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PropertyValue, Vec3};

pub use align::{align_edits, detect_agreement, infer_zone, ZoneProvenance};
pub use build::{build_knowledge_base, BuildOutput, BuildReport, MeetingInput};
pub use classify::classify_utterance;
pub use inputs::{
    build_from_manifest, load_manifest, parse_annotations, parse_edit_log, Manifest,
    ManifestMeeting, ProjectInputs,
};
pub use lexicon::Lexicon;
pub use link::{link_objects, name_similarity};
pub use review::{confirm_entry, needs_review_entries};
pub use transcript::{
    parse_transcript, speaker_slug, OverlapWarning, Transcript, TranscriptFormat,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("zones need restriction or encouragement polarity, got {0:?}")]
    PolarityInvalid(Polarity),
    #[error("unknown entry `{0}`")]
    UnknownEntry(String),
    #[error("pipeline produced an invalid knowledge base: {0}")]
    Internal(String),
}

impl PipelineError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}

/// A transcript line with timing and speaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub t_start: f64,
    pub t_end: f64,
    /// Contributor id, or a speaker slug until resolved against the roster.
    pub speaker: String,
    pub text: String,
}

impl Utterance {
    pub fn new(
        t_start: f64,
        t_end: f64,
        speaker: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            t_start,
            t_end,
            speaker: speaker.into(),
            text: text.into(),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }

    /// Distance from `t` to the utterance span, zero inside it.
    pub fn gap_to(&self, t: f64) -> f64 {
        if t < self.t_start {
            self.t_start - t
        } else if t > self.t_end {
            t - self.t_end
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Transform,
    Property,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EditValue {
    Vec3(Vec3),
    Property(PropertyValue),
}

/// One timestamped change recorded by the editor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditEvent {
    pub t: f64,
    pub object_id: String,
    pub kind: EditKind,
    /// `position`, `rotation`, `scale`, or a property path.
    pub field: String,
    pub old: EditValue,
    pub new: EditValue,
    pub actor: String,
}

impl EditEvent {
    /// New position for position edits.
    pub fn new_position(&self) -> Option<Vec3> {
        match (&self.kind, self.field.as_str(), &self.new) {
            (EditKind::Transform, "position", EditValue::Vec3(p)) => Some(*p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    CursorCircle,
    Whiteboard,
    PlaceholderCube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEvent {
    pub t: f64,
    pub kind: AnnotationKind,
    /// Scene coordinates for cubes, screen-normalized otherwise.
    pub position: Vec3,
    /// Cube half-size in meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DialogAct {
    Decision,
    Comment,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Restriction,
    Encouragement,
    Style,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub utterance: Utterance,
    pub dialog_act: DialogAct,
    pub polarity: Polarity,
    /// Sorted by descending score, then object id.
    pub matched_objects: Vec<(String, f64)>,
    pub linked_edits: Vec<EditEvent>,
    pub confidence: f64,
}

impl Candidate {
    pub fn best_link_score(&self) -> f64 {
        self.matched_objects.first().map_or(0.0, |(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Alignment window, seconds.
    pub window: f64,
    /// Minimum name-match score for an object link.
    pub link_threshold: f64,
    /// Entries below this confidence are flagged for review.
    pub review_threshold: f64,
    /// How far after an utterance agreement is looked for, seconds.
    pub agreement_window: f64,
    /// Zone radius when only edits locate the zone, meters.
    pub default_zone_radius: f64,
    /// Tolerance given to scalar style constraints.
    pub scalar_tolerance: f64,
    pub lexicon: Lexicon,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: 30.0,
            link_threshold: 0.6,
            review_threshold: 0.75,
            agreement_window: 15.0,
            default_zone_radius: 1.5,
            scalar_tolerance: 0.05,
            lexicon: Lexicon::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Manifest(m.to_string()));
        if !(self.window.is_finite() && self.window > 0.0) {
            return bad("window must be > 0");
        }
        if !(self.link_threshold > 0.0 && self.link_threshold <= 1.0) {
            return bad("link threshold must be in (0, 1]");
        }
        if !(self.review_threshold > 0.0 && self.review_threshold <= 1.0) {
            return bad("review threshold must be in (0, 1]");
        }
        if !(self.default_zone_radius.is_finite() && self.default_zone_radius > 0.0) {
            return bad("default zone radius must be > 0");
        }
        Ok(())
    }
}
