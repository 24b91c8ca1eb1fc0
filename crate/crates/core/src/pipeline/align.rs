//! Temporal alignment: edits near an utterance, zone geometry from
//! annotations, and agreement in the following discussion.

use crate::model::{Agreer, DepartmentTag, Zone, ZoneKind};

use super::lexicon::words;
use super::{
    AnnotationEvent, AnnotationKind, Candidate, EditEvent, PipelineConfig, PipelineError, Polarity,
    Utterance,
};

/// Edits of `matched` objects inside `[t_start - w, t_end + w]`, nearest to
/// the utterance midpoint first.
pub fn align_edits(
    u: &Utterance,
    edits: &[EditEvent],
    matched: &[String],
    window: f64,
) -> Vec<EditEvent> {
    let lo = u.t_start - window;
    let hi = u.t_end + window;
    let mid = u.midpoint();
    let mut out: Vec<EditEvent> = edits
        .iter()
        .filter(|e| matched.contains(&e.object_id) && e.t >= lo && e.t <= hi)
        .cloned()
        .collect();
    out.sort_by(|a, b| {
        (a.t - mid)
            .abs()
            .total_cmp(&(b.t - mid).abs())
            .then(a.t.total_cmp(&b.t))
    });
    out
}

/// Identity fields of a zone emitted for an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneProvenance {
    pub zone_id: String,
    pub entry_id: String,
    pub department: DepartmentTag,
}

/// Zone geometry for a placement candidate.
///
/// The placeholder cube nearest in time (within the window) gives center and
/// radius; equally near cubes are separated by proximity to a cursor or
/// whiteboard annotation, then by time. Without a cube, the final position of
/// the linked move edits is used with the default radius. Otherwise `None`.
pub fn infer_zone(
    c: &Candidate,
    annotations: &[AnnotationEvent],
    cfg: &PipelineConfig,
    provenance: &ZoneProvenance,
) -> Result<Option<Zone>, PipelineError> {
    let kind = match c.polarity {
        Polarity::Restriction => ZoneKind::Restriction,
        Polarity::Encouragement => ZoneKind::Encouragement,
        other => return Err(PipelineError::PolarityInvalid(other)),
    };
    let u = &c.utterance;
    let lo = u.t_start - cfg.window;
    let hi = u.t_end + cfg.window;
    let mid = u.midpoint();
    let pointers: Vec<f64> = annotations
        .iter()
        .filter(|a| {
            matches!(
                a.kind,
                AnnotationKind::CursorCircle | AnnotationKind::Whiteboard
            )
        })
        .map(|a| a.t)
        .collect();
    let pointer_gap = |t: f64| {
        pointers
            .iter()
            .map(|p| (p - t).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let cube = annotations
        .iter()
        .filter(|a| {
            a.kind == AnnotationKind::PlaceholderCube
                && a.t >= lo
                && a.t <= hi
                && a.position.is_finite()
        })
        .min_by(|a, b| {
            (a.t - mid)
                .abs()
                .total_cmp(&(b.t - mid).abs())
                .then(pointer_gap(a.t).total_cmp(&pointer_gap(b.t)))
                .then(a.t.total_cmp(&b.t))
        });

    let geometry = if let Some(cube) = cube {
        let radius = cube
            .extent
            .filter(|e| e.is_finite() && *e > 0.0)
            .unwrap_or(cfg.default_zone_radius);
        Some((cube.position, radius))
    } else {
        c.linked_edits
            .iter()
            .filter_map(|e| e.new_position().map(|p| (e.t, p)))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| (p, cfg.default_zone_radius))
    };

    Ok(geometry.map(|(center, radius)| {
        let mut targets: Vec<String> = c.matched_objects.iter().map(|(id, _)| id.clone()).collect();
        targets.sort();
        Zone {
            zone_id: provenance.zone_id.clone(),
            kind,
            center,
            radius,
            department: provenance.department.clone(),
            target_object_ids: targets,
            entry_ids: vec![provenance.entry_id.clone()],
        }
    }))
}

/// Remainder of `text` after its leading agreement marker, if it opens with one.
pub(crate) fn agreement_remark(text: &str, cfg: &PipelineConfig) -> Option<Option<String>> {
    let tokens = words(text);
    let mut markers: Vec<&String> = cfg.lexicon.agreement_markers.iter().collect();
    markers.sort_by_key(|m| std::cmp::Reverse(m.split_whitespace().count()));
    let marker = markers.into_iter().find(|m| {
        let parts: Vec<&str> = m.split_whitespace().collect();
        tokens.len() >= parts.len() && tokens.iter().zip(&parts).all(|(t, p)| t == p)
    })?;
    // Skip the marker's words in the original text, preserving its casing.
    let mut rest = text.trim_start();
    for part in marker.split_whitespace() {
        rest = rest.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '\'');
        let cut = rest
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '\'' || *c == '\u{2019}'))
            .map_or(rest.len(), |(i, _)| i);
        debug_assert!(rest[..cut].to_lowercase().replace('\u{2019}', "'") == part);
        rest = &rest[cut..];
    }
    let remark = rest
        .trim_start_matches(|c: char| c.is_whitespace() || ",.;:!-\u{2014}".contains(c))
        .trim();
    Some((!remark.is_empty()).then(|| remark.to_string()))
}

/// Other speakers who open a following utterance (within the agreement
/// window) with an agreement marker. Each speaker counts once.
pub fn detect_agreement(
    u: &Utterance,
    following: &[Utterance],
    cfg: &PipelineConfig,
) -> Vec<Agreer> {
    let mut out: Vec<Agreer> = Vec::new();
    for f in following {
        if f.t_start > u.t_end + cfg.agreement_window || f.t_start < u.t_start {
            continue;
        }
        if f.speaker == u.speaker || out.iter().any(|a| a.contributor_id == f.speaker) {
            continue;
        }
        if let Some(remark) = agreement_remark(&f.text, cfg) {
            out.push(Agreer {
                contributor_id: f.speaker.clone(),
                remark,
            });
        }
    }
    out
}
