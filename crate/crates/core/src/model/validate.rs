use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{KnowledgeBase, PropertyValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    DuplicateId,
    DanglingReference,
    NonPositiveRadius,
    NonPositiveDuration,
    NonFiniteNumber,
    InvalidDate,
    SegmentOutOfRange,
    DuplicateSegment,
    HistoryNotIncreasing,
    ConfidenceOutOfRange,
    NegativeTolerance,
    MissingProvenance,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One broken invariant, identified by code and offending id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub id: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.id, self.detail)
    }
}

#[derive(Default)]
struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, code: ViolationCode, id: &str, detail: impl Into<String>) {
        self.0.push(Violation {
            code,
            id: id.to_string(),
            detail: detail.into(),
        });
    }

    fn dangling(&mut self, id: &str, what: &str, owner: &str) {
        self.push(
            ViolationCode::DanglingReference,
            id,
            format!("{what} referenced by {owner}"),
        );
    }
}

fn unique<'a>(
    report: &mut Report,
    what: &str,
    ids: impl Iterator<Item = &'a str>,
) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            report.push(
                ViolationCode::DuplicateId,
                id,
                format!("duplicate {what} id"),
            );
        }
    }
    seen
}

/// Lists every broken invariant. Empty iff `kb` is valid.
pub fn validate_references(kb: &KnowledgeBase) -> Vec<Violation> {
    use ViolationCode::*;
    let mut r = Report::default();

    let meetings = unique(
        &mut r,
        "meeting",
        kb.meetings.iter().map(|m| m.meeting_id.as_str()),
    );
    let contributors = unique(
        &mut r,
        "contributor",
        kb.contributors.iter().map(|c| c.contributor_id.as_str()),
    );
    let objects = unique(
        &mut r,
        "object",
        kb.scene_objects.iter().map(|o| o.object_id.as_str()),
    );
    let entries = unique(
        &mut r,
        "entry",
        kb.entries.iter().map(|e| e.entry_id.as_str()),
    );
    let constraints = unique(
        &mut r,
        "constraint",
        kb.zones.iter().map(|z| z.zone_id.as_str()).chain(
            kb.style_constraints
                .iter()
                .map(|c| c.constraint_id.as_str()),
        ),
    );

    let durations: BTreeMap<&str, f64> = kb
        .meetings
        .iter()
        .map(|m| (m.meeting_id.as_str(), m.duration))
        .collect();

    for m in &kb.meetings {
        if !(m.duration.is_finite() && m.duration > 0.0) {
            r.push(
                NonPositiveDuration,
                &m.meeting_id,
                format!("duration {}", m.duration),
            );
        }
        if m.date_key().is_none() {
            r.push(
                InvalidDate,
                &m.meeting_id,
                format!("date `{}` is not ISO-8601", m.date),
            );
        }
    }

    for o in &kb.scene_objects {
        let mut last_t: BTreeMap<&str, f64> = BTreeMap::new();
        for s in &o.position_history {
            if !meetings.contains(s.meeting_id.as_str()) {
                r.dangling(&s.meeting_id, "meeting", &o.object_id);
            }
            if !s.t.is_finite() || !s.position.is_finite() {
                r.push(NonFiniteNumber, &o.object_id, "position history sample");
                continue;
            }
            if let Some(prev) = last_t.insert(s.meeting_id.as_str(), s.t) {
                if s.t <= prev {
                    r.push(
                        HistoryNotIncreasing,
                        &o.object_id,
                        format!("t {} after {} in {}", s.t, prev, s.meeting_id),
                    );
                }
            }
        }
    }

    let mut segments: BTreeSet<(String, u64, u64, u32)> = BTreeSet::new();
    for e in &kb.entries {
        let owner = e.entry_id.as_str();
        for oid in &e.object_ids {
            if !objects.contains(oid.as_str()) {
                r.dangling(oid, "object", owner);
            }
        }
        if !contributors.contains(e.editor.as_str()) {
            r.dangling(&e.editor, "contributor", owner);
        }
        for a in &e.agreers {
            if !contributors.contains(a.contributor_id.as_str()) {
                r.dangling(&a.contributor_id, "contributor", owner);
            }
        }
        for cid in &e.linked_constraint_ids {
            if !constraints.contains(cid.as_str()) {
                r.dangling(cid, "constraint", owner);
            }
        }
        let seg = &e.segment;
        match durations.get(seg.meeting_id.as_str()) {
            None => r.dangling(&seg.meeting_id, "meeting", owner),
            Some(&duration) => {
                let ok = seg.t_start.is_finite()
                    && seg.t_end.is_finite()
                    && 0.0 <= seg.t_start
                    && seg.t_start < seg.t_end
                    && seg.t_end <= duration;
                if !ok {
                    r.push(
                        SegmentOutOfRange,
                        owner,
                        format!("[{}, {}] outside [0, {}]", seg.t_start, seg.t_end, duration),
                    );
                }
            }
        }
        let key = (
            seg.meeting_id.clone(),
            seg.t_start.to_bits(),
            seg.t_end.to_bits(),
            seg.ordinal,
        );
        if !segments.insert(key) {
            r.push(DuplicateSegment, owner, "segment shared with another entry");
        }
        if !(0.0..=1.0).contains(&e.confidence) {
            r.push(
                ConfidenceOutOfRange,
                owner,
                format!("confidence {}", e.confidence),
            );
        }
    }

    for z in &kb.zones {
        let owner = z.zone_id.as_str();
        if !(z.radius.is_finite() && z.radius > 0.0) {
            r.push(NonPositiveRadius, owner, format!("radius {}", z.radius));
        }
        if !z.center.is_finite() {
            r.push(NonFiniteNumber, owner, "zone center");
        }
        for oid in &z.target_object_ids {
            if !objects.contains(oid.as_str()) {
                r.dangling(oid, "object", owner);
            }
        }
        if z.entry_ids.is_empty() {
            r.push(MissingProvenance, owner, "zone has no entries");
        }
        for eid in &z.entry_ids {
            if !entries.contains(eid.as_str()) {
                r.dangling(eid, "entry", owner);
            }
        }
    }

    for c in &kb.style_constraints {
        let owner = c.constraint_id.as_str();
        if !objects.contains(c.object_id.as_str()) {
            r.dangling(&c.object_id, "object", owner);
        }
        if !(c.tolerance.is_finite() && c.tolerance >= 0.0) {
            r.push(
                NegativeTolerance,
                owner,
                format!("tolerance {}", c.tolerance),
            );
        }
        if let PropertyValue::Scalar(v) = c.expected {
            if !v.is_finite() {
                r.push(NonFiniteNumber, owner, "expected value");
            }
        }
        if c.entry_ids.is_empty() {
            r.push(MissingProvenance, owner, "constraint has no entries");
        }
        for eid in &c.entry_ids {
            if !entries.contains(eid.as_str()) {
                r.dangling(eid, "entry", owner);
            }
        }
    }

    r.0
}
