use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::align::agreement_remark;
use super::classify::classify_utterance;
use super::lexicon::{css_color, first_match, words};
use super::{
    align_edits, detect_agreement, infer_zone, link_objects, AnnotationEvent, Candidate, DialogAct,
    EditEvent, EditValue, PipelineConfig, PipelineError, Polarity, Utterance, ZoneProvenance,
};
use crate::model::{
    validate_references, Agreer, Contributor, Entry, EntryKind, KnowledgeBase, Meeting,
    MeetingSegment, PositionSample, PropertyValue, SceneObject, StyleConstraint,
};

/// One meeting's parsed inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetingInput {
    pub meeting: Meeting,
    pub utterances: Vec<Utterance>,
    pub edits: Vec<EditEvent>,
    pub annotations: Vec<AnnotationEvent>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub entries: usize,
    pub zones: usize,
    pub constraints: usize,
    pub needs_review: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub kb: KnowledgeBase,
    pub report: BuildReport,
    /// Retained candidates in emission order.
    pub candidates: Vec<Candidate>,
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(%|percent\b)?").unwrap());

const OPACITY_WORDS: [&str; 4] = ["opacity", "opaque", "transparent", "translucent"];
const FOV_WORDS: [&str; 4] = ["field of view", "fov", "wider", "narrower"];
const INTENSITY_WORDS: [&str; 5] = ["brighter", "darker", "dimmer", "brightness", "intensity"];
const EXTRA_COLORS: [&str; 3] = ["orange", "pink", "brown"];

struct StyleTarget {
    property: &'static str,
    expected: PropertyValue,
    message: String,
    tolerance: f64,
    /// Expected value could not be read from the utterance.
    unresolved: bool,
}

fn first_of(tokens: &[String], patterns: &[&str]) -> Option<String> {
    let owned: Vec<String> = patterns.iter().map(|s| s.to_string()).collect();
    first_match(tokens, &owned).map(str::to_string)
}

/// Property, expected value and message of a style remark.
fn style_target(text: &str, cfg: &PipelineConfig) -> StyleTarget {
    let tokens = words(text);
    let scalar = |property: &'static str, label: &str, word: String| match NUMBER.captures(text) {
        Some(c) => {
            let mut v: f64 = c[1].parse().unwrap_or(0.0);
            if c.get(2).is_some() {
                v /= 100.0;
            }
            StyleTarget {
                property,
                expected: PropertyValue::Scalar(v),
                message: format!("{label} should be {v}"),
                tolerance: cfg.scalar_tolerance,
                unresolved: false,
            }
        }
        None => StyleTarget {
            property,
            message: format!("Should be {word}"),
            expected: PropertyValue::Text(word),
            tolerance: 0.0,
            unresolved: true,
        },
    };
    if let Some(w) = first_of(&tokens, &OPACITY_WORDS) {
        return scalar("opacity", "Opacity", w);
    }
    if let Some(w) = first_of(&tokens, &FOV_WORDS) {
        return scalar("fieldOfView", "Field of view", w);
    }
    if let Some(w) = first_of(&tokens, &INTENSITY_WORDS) {
        return scalar("intensity", "Intensity", w);
    }
    if let Some((name, rgb)) = tokens
        .iter()
        .find_map(|t| css_color(t).map(|c| (t.clone(), c)))
    {
        return StyleTarget {
            property: "material.color",
            expected: PropertyValue::Color(rgb),
            message: format!("Should be {name}"),
            tolerance: 0.0,
            unresolved: false,
        };
    }
    let word = tokens
        .iter()
        .find(|t| EXTRA_COLORS.contains(&t.as_str()))
        .cloned()
        .unwrap_or_else(|| "unspecified".to_string());
    StyleTarget {
        property: "material.color",
        message: format!("Should be {word}"),
        expected: PropertyValue::Text(word),
        tolerance: 0.0,
        unresolved: true,
    }
}

fn resolve_speaker<'a>(speaker: &str, contributors: &'a [Contributor]) -> Option<&'a Contributor> {
    let slug = super::speaker_slug(speaker);
    contributors
        .iter()
        .find(|c| c.contributor_id == speaker)
        .or_else(|| {
            contributors.iter().find(|c| {
                super::speaker_slug(&c.contributor_id) == slug
                    || super::speaker_slug(&c.name) == slug
                    || c.name
                        .split_whitespace()
                        .next()
                        .is_some_and(|first| super::speaker_slug(first) == slug)
            })
        })
}

/// Drops edits that break the edit-log invariants, with a diagnostic each.
fn usable_edits(
    input: &MeetingInput,
    objects: &[SceneObject],
    diagnostics: &mut Vec<String>,
) -> Vec<EditEvent> {
    let meeting = &input.meeting;
    let mut edits: Vec<EditEvent> = input
        .edits
        .iter()
        .filter(|e| {
            let problem = if objects.iter().all(|o| o.object_id != e.object_id) {
                Some("unknown object")
            } else if !(e.t.is_finite() && e.t >= 0.0 && e.t <= meeting.duration) {
                Some("time outside meeting")
            } else if e.old == e.new {
                Some("old equals new")
            } else if matches!(&e.new, EditValue::Vec3(p) if !p.is_finite()) {
                Some("non-finite position")
            } else {
                None
            };
            if let Some(p) = problem {
                diagnostics.push(format!(
                    "{}: skipped edit of `{}` at {}: {p}",
                    meeting.meeting_id, e.object_id, e.t
                ));
            }
            problem.is_none()
        })
        .cloned()
        .collect();
    edits.sort_by(|a, b| a.t.total_cmp(&b.t));
    edits
}

struct MeetingBuild<'a> {
    cfg: &'a PipelineConfig,
    objects: &'a [SceneObject],
    contributors: &'a [Contributor],
    kb: &'a mut KnowledgeBase,
    report: &'a mut BuildReport,
    candidates: &'a mut Vec<Candidate>,
    histories: &'a mut BTreeMap<String, Vec<PositionSample>>,
}

impl MeetingBuild<'_> {
    fn run(&mut self, input: &MeetingInput) {
        let cfg = self.cfg;
        let meeting = &input.meeting;
        let mid = meeting.meeting_id.as_str();
        let edits = usable_edits(input, self.objects, &mut self.report.diagnostics);

        let mut per_object: BTreeMap<String, Vec<PositionSample>> = BTreeMap::new();
        for e in &edits {
            if let Some(p) = e.new_position() {
                let samples = per_object.entry(e.object_id.clone()).or_default();
                match samples.last_mut() {
                    Some(last) if last.t == e.t => last.position = p,
                    _ => samples.push(PositionSample {
                        meeting_id: mid.to_string(),
                        t: e.t,
                        position: p,
                    }),
                }
            }
        }
        for (oid, samples) in per_object {
            self.histories.entry(oid).or_default().extend(samples);
        }

        let mut utterances = input.utterances.clone();
        utterances.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        let mut consumed = BTreeSet::new();
        let mut ordinals: BTreeMap<i64, u32> = BTreeMap::new();

        for (i, u) in utterances.iter().enumerate() {
            if consumed.contains(&i) {
                continue;
            }
            let (act, polarity) = classify_utterance(u, cfg);
            let kind = match act {
                DialogAct::Decision => EntryKind::Decision,
                DialogAct::Comment => EntryKind::Comment,
                DialogAct::None => continue,
            };
            let Some(editor) = resolve_speaker(&u.speaker, self.contributors) else {
                self.report.diagnostics.push(format!(
                    "{mid}: utterance at {} from unknown speaker `{}` skipped",
                    u.t_start, u.speaker
                ));
                continue;
            };

            let matched = link_objects(u, self.objects, cfg.link_threshold);
            let matched_ids: Vec<String> = matched.iter().map(|(id, _)| id.clone()).collect();
            let linked = align_edits(u, &edits, &matched_ids, cfg.window);
            let proximity = linked
                .iter()
                .map(|e| u.gap_to(e.t))
                .reduce(f64::min)
                .map_or(0.0, |gap| (1.0 - gap / cfg.window).max(0.0));
            let best = matched.first().map_or(0.0, |(_, s)| *s);
            let confidence = (0.5 * best + 0.5 * proximity).clamp(0.0, 1.0);

            let following = &utterances[i + 1..];
            for (j, f) in following.iter().enumerate() {
                if f.t_start > u.t_end + cfg.agreement_window || f.speaker == u.speaker {
                    continue;
                }
                if let Some(remark) = agreement_remark(&f.text, cfg) {
                    let rest = Utterance {
                        text: remark.unwrap_or_default(),
                        ..f.clone()
                    };
                    if classify_utterance(&rest, cfg).0 == DialogAct::None {
                        consumed.insert(i + 1 + j);
                    }
                }
            }
            let mut agreers: Vec<Agreer> = Vec::new();
            for a in detect_agreement(u, following, cfg) {
                let Some(c) = resolve_speaker(&a.contributor_id, self.contributors) else {
                    continue;
                };
                if c.contributor_id != editor.contributor_id
                    && agreers.iter().all(|x| x.contributor_id != c.contributor_id)
                {
                    agreers.push(Agreer {
                        contributor_id: c.contributor_id.clone(),
                        remark: a.remark,
                    });
                }
            }

            let t_start = linked
                .iter()
                .map(|e| e.t)
                .fold(u.t_start, f64::min)
                .max(0.0);
            let t_end = linked
                .iter()
                .map(|e| e.t)
                .fold(u.t_end, f64::max)
                .min(meeting.duration);
            if t_start >= t_end {
                self.report.diagnostics.push(format!(
                    "{mid}: utterance at {} lies outside the meeting",
                    u.t_start
                ));
                continue;
            }
            let start_ms = (t_start * 1000.0).round() as i64;
            let ordinal = {
                let n = ordinals.entry(start_ms).or_insert(0);
                *n += 1;
                *n - 1
            };
            let suffix = format!("{mid}-{start_ms}-{ordinal}");
            let entry_id = format!("e-{suffix}");

            let candidate = Candidate {
                utterance: u.clone(),
                dialog_act: act,
                polarity,
                matched_objects: matched,
                linked_edits: linked,
                confidence,
            };

            let mut flagged = false;
            let mut linked_constraint_ids = Vec::new();
            // Hedged observations never become constraints.
            let actionable = if kind == EntryKind::Decision {
                polarity
            } else {
                Polarity::Neutral
            };
            match actionable {
                Polarity::Restriction | Polarity::Encouragement => {
                    let provenance = ZoneProvenance {
                        zone_id: format!("z-{suffix}"),
                        entry_id: entry_id.clone(),
                        department: editor.department.clone(),
                    };
                    match infer_zone(&candidate, &input.annotations, cfg, &provenance) {
                        Ok(Some(zone)) => {
                            linked_constraint_ids.push(zone.zone_id.clone());
                            self.kb.zones.push(zone);
                        }
                        _ => flagged = true,
                    }
                }
                Polarity::Style => match matched_ids.first() {
                    Some(object_id) => {
                        let target = style_target(&u.text, cfg);
                        flagged |= target.unresolved;
                        let constraint_id = format!("s-{suffix}");
                        linked_constraint_ids.push(constraint_id.clone());
                        self.kb.style_constraints.push(StyleConstraint {
                            constraint_id,
                            object_id: object_id.clone(),
                            property: target.property.to_string(),
                            expected: target.expected,
                            tolerance: target.tolerance,
                            message: target.message,
                            entry_ids: vec![entry_id.clone()],
                        });
                    }
                    None => flagged = true,
                },
                Polarity::Neutral => {}
            }

            self.kb.entries.push(Entry {
                entry_id,
                kind,
                summary: u.text.clone(),
                detail: None,
                object_ids: matched_ids,
                editor: editor.contributor_id.clone(),
                agreers,
                segment: MeetingSegment {
                    meeting_id: mid.to_string(),
                    t_start,
                    t_end,
                    media_ref: meeting.media_ref.clone(),
                    ordinal,
                },
                linked_constraint_ids,
                confidence,
                needs_review: flagged || confidence < cfg.review_threshold,
            });
            self.candidates.push(candidate);
        }
    }
}

/// Runs the pipeline over every meeting and assembles a validated knowledge
/// base. Meetings are processed in date order.
pub fn build_knowledge_base(
    project_id: &str,
    meetings: &[MeetingInput],
    objects: &[SceneObject],
    contributors: &[Contributor],
    cfg: &PipelineConfig,
) -> Result<BuildOutput, PipelineError> {
    cfg.validate()?;
    let mut kb = KnowledgeBase::empty(project_id);
    kb.contributors = contributors.to_vec();
    kb.meetings = meetings.iter().map(|m| m.meeting.clone()).collect();
    kb.normalize();

    let mut ordered: Vec<&MeetingInput> = meetings.iter().collect();
    ordered.sort_by(|a, b| {
        let ka = (a.meeting.date_key().is_none(), a.meeting.date_key());
        let kb = (b.meeting.date_key().is_none(), b.meeting.date_key());
        ka.cmp(&kb)
            .then_with(|| a.meeting.meeting_id.cmp(&b.meeting.meeting_id))
    });

    let mut report = BuildReport::default();
    let mut candidates = Vec::new();
    let mut histories: BTreeMap<String, Vec<PositionSample>> = BTreeMap::new();
    for input in ordered {
        MeetingBuild {
            cfg,
            objects,
            contributors,
            kb: &mut kb,
            report: &mut report,
            candidates: &mut candidates,
            histories: &mut histories,
        }
        .run(input);
    }

    kb.scene_objects = objects
        .iter()
        .map(|o| {
            let mut o = o.clone();
            if let Some(h) = histories.remove(&o.object_id) {
                o.position_history.extend(h);
            }
            o
        })
        .collect();
    kb.normalize();

    let violations = validate_references(&kb);
    if let Some(v) = violations.first() {
        return Err(PipelineError::Internal(v.to_string()));
    }
    report.entries = kb.entries.len();
    report.zones = kb.zones.len();
    report.constraints = kb.zones.len() + kb.style_constraints.len();
    report.needs_review = kb.entries.iter().filter(|e| e.needs_review).count();
    Ok(BuildOutput {
        kb,
        report,
        candidates,
    })
}
