//! Filtering, minimap traces and scoped summaries over a knowledge base.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{parse_iso_date, Entry, EntryKind, KnowledgeBase, MeetingSegment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("invalid date `{0}`")]
    InvalidDate(String),
    #[error("summary backend unavailable: {0}")]
    BackendUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateRange {
    pub from: String,
    pub to: String,
}

/// Conjunction across dimensions, union within one. Absent fields do not
/// constrain.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributor_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meeting_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_range: Option<DateRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<BTreeSet<EntryKind>>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        self == &Self::default()
    }

    pub fn with_objects<I: IntoIterator<Item = S>, S: Into<String>>(mut self, ids: I) -> Self {
        self.object_ids = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_contributors<I: IntoIterator<Item = S>, S: Into<String>>(mut self, ids: I) -> Self {
        self.contributor_ids = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    /// Every present id must resolve and dates must parse.
    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), QueryError> {
        let check = |ids: &Option<BTreeSet<String>>, known: &dyn Fn(&str) -> bool| {
            ids.iter()
                .flatten()
                .find(|id| !known(id))
                .map_or(Ok(()), |id| Err(QueryError::UnknownId(id.clone())))
        };
        check(&self.object_ids, &|id| kb.object(id).is_some())?;
        check(&self.contributor_ids, &|id| kb.contributor(id).is_some())?;
        check(&self.meeting_ids, &|id| kb.meeting(id).is_some())?;
        if let Some(r) = &self.date_range {
            for d in [&r.from, &r.to] {
                if parse_iso_date(d).is_none() {
                    return Err(QueryError::InvalidDate(d.clone()));
                }
            }
        }
        Ok(())
    }

    /// Whether `entry` satisfies every present clause.
    pub fn matches(&self, kb: &KnowledgeBase, entry: &Entry) -> bool {
        if let Some(ids) = &self.object_ids {
            if !entry.object_ids.iter().any(|o| ids.contains(o)) {
                return false;
            }
        }
        if let Some(ids) = &self.contributor_ids {
            let involved = ids.contains(&entry.editor)
                || entry
                    .agreers
                    .iter()
                    .any(|a| ids.contains(&a.contributor_id));
            if !involved {
                return false;
            }
        }
        if let Some(kinds) = &self.kinds {
            if !kinds.contains(&entry.kind) {
                return false;
            }
        }
        if let Some(ids) = &self.meeting_ids {
            if !ids.contains(&entry.segment.meeting_id) {
                return false;
            }
        }
        if self.phases.is_none() && self.date_range.is_none() {
            return true;
        }
        let Some(meeting) = kb.meeting(&entry.segment.meeting_id) else {
            return false;
        };
        if let Some(phases) = &self.phases {
            if !phases.contains(&meeting.phase) {
                return false;
            }
        }
        if let Some(range) = &self.date_range {
            let (Some(d), Some(from), Some(to)) = (
                meeting.date_key(),
                parse_iso_date(&range.from),
                parse_iso_date(&range.to),
            ) else {
                return false;
            };
            // A date-only upper bound covers its whole day.
            let upper_ok = if range.to.trim().len() == 10 {
                d < to + chrono::Duration::days(1)
            } else {
                d <= to
            };
            if d < from || !upper_ok {
                return false;
            }
        }
        true
    }
}

/// Entries matching `f`, in chronological order.
pub fn apply_filter<'a>(
    kb: &'a KnowledgeBase,
    f: &FilterSpec,
) -> Result<Vec<&'a Entry>, QueryError> {
    f.validate(kb)?;
    let mut out: Vec<&Entry> = kb.entries.iter().filter(|e| f.matches(kb, e)).collect();
    out.sort_by(|a, b| kb.compare_entries(a, b));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub meeting_id: String,
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimapTrace {
    pub object_id: String,
    pub points: Vec<TracePoint>,
    pub emphasized: bool,
}

/// One trace per object with recorded positions. Nothing is emphasized
/// without an active filter.
pub fn minimap_traces(kb: &KnowledgeBase, f: &FilterSpec) -> Result<Vec<MinimapTrace>, QueryError> {
    let emphasized: BTreeSet<&str> = if f.is_empty() {
        BTreeSet::new()
    } else {
        let mut set: BTreeSet<&str> = apply_filter(kb, f)?
            .into_iter()
            .flat_map(|e| e.object_ids.iter().map(String::as_str))
            .collect();
        set.extend(f.object_ids.iter().flatten().map(String::as_str));
        set
    };
    let mut kb_sorted = kb.clone();
    kb_sorted.normalize();
    Ok(kb_sorted
        .scene_objects
        .iter()
        .filter(|o| !o.position_history.is_empty())
        .map(|o| MinimapTrace {
            object_id: o.object_id.clone(),
            points: o
                .position_history
                .iter()
                .map(|s| TracePoint {
                    meeting_id: s.meeting_id.clone(),
                    t: s.t,
                    x: s.position.x,
                    z: s.position.z,
                })
                .collect(),
            emphasized: emphasized.contains(o.object_id.as_str()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopedSummary {
    pub text: String,
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub const EMPTY_SUMMARY: &str = "No decisions or comments match the current filter.";

/// Response from an external completion service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub citations: Vec<String>,
}

/// Pluggable text-completion service used by the external summary backend.
pub trait CompletionClient {
    fn complete(&self, instruction: &str, context: &Value) -> Result<Completion, QueryError>;
}

/// Replays a fixed response; stands in for a live model in tests.
#[derive(Debug, Clone)]
pub struct RecordedCompletion(pub Result<Completion, String>);

impl CompletionClient for RecordedCompletion {
    fn complete(&self, _instruction: &str, _context: &Value) -> Result<Completion, QueryError> {
        self.0.clone().map_err(QueryError::BackendUnavailable)
    }
}

pub enum SummaryBackend<'a> {
    Template,
    External(&'a dyn CompletionClient),
}

fn template_summary(kb: &KnowledgeBase, entries: &[&Entry]) -> ScopedSummary {
    if entries.is_empty() {
        return ScopedSummary {
            text: EMPTY_SUMMARY.to_string(),
            citations: vec![],
            warnings: vec![],
        };
    }
    let decisions = entries
        .iter()
        .filter(|e| e.kind == EntryKind::Decision)
        .count();
    let comments = entries.len() - decisions;
    let names: BTreeSet<&str> = entries
        .iter()
        .flat_map(|e| e.object_ids.iter())
        .map(|id| {
            kb.object(id)
                .map_or(id.as_str(), |o| o.display_name.as_str())
        })
        .collect();
    let meetings: BTreeSet<&str> = entries
        .iter()
        .map(|e| e.segment.meeting_id.as_str())
        .collect();
    let about = if names.is_empty() {
        "no specific objects".to_string()
    } else {
        names.into_iter().collect::<Vec<_>>().join(", ")
    };
    let clauses: Vec<String> = entries
        .iter()
        .map(|e| {
            let editor = kb
                .contributor(&e.editor)
                .map_or(e.editor.as_str(), |c| c.name.as_str());
            let verb = match e.kind {
                EntryKind::Decision => "decided",
                EntryKind::Comment => "noted",
            };
            format!("{editor} {verb} {} [{}]", e.summary.trim(), e.entry_id)
        })
        .collect();
    let text = format!(
        "{decisions} decisions and {comments} comments about {about} from {} meetings: {}.",
        meetings.len(),
        clauses.join("; ")
    );
    ScopedSummary {
        text,
        citations: entries.iter().map(|e| e.entry_id.clone()).collect(),
        warnings: vec![],
    }
}

/// Summary restricted to the entries `f` selects. Citations from either
/// backend are limited to that set.
pub fn summarize(
    kb: &KnowledgeBase,
    f: &FilterSpec,
    backend: SummaryBackend<'_>,
) -> Result<ScopedSummary, QueryError> {
    let entries = apply_filter(kb, f)?;
    match backend {
        SummaryBackend::Template => Ok(template_summary(kb, &entries)),
        SummaryBackend::External(client) => {
            let allowed: BTreeSet<&str> = entries.iter().map(|e| e.entry_id.as_str()).collect();
            let context = serde_json::json!({
                "filter": f,
                "entries": entries,
            });
            let completion = client.complete(
                "Summarize these production decisions and comments. Cite entries as [entry_id].",
                &context,
            )?;
            let mut warnings = Vec::new();
            let mut citations: Vec<String> = Vec::new();
            for c in completion.citations {
                if !allowed.contains(c.as_str()) {
                    tracing::warn!(citation = %c, "dropping citation outside the filtered entries");
                    warnings.push(format!("dropped citation `{c}` outside the current filter"));
                } else if !citations.contains(&c) {
                    citations.push(c);
                }
            }
            Ok(ScopedSummary {
                text: completion.text,
                citations,
                warnings,
            })
        }
    }
}

pub fn entry_segment<'a>(
    kb: &'a KnowledgeBase,
    entry_id: &str,
) -> Result<&'a MeetingSegment, QueryError> {
    kb.entry(entry_id)
        .map(|e| &e.segment)
        .ok_or_else(|| QueryError::UnknownId(entry_id.to_string()))
}
