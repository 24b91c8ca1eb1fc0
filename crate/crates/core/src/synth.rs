//! Seeded generators for valid knowledge bases and filters, used by property
//! tests and benchmarks.
//!
//! Generated knowledge bases are already in canonical order: meetings by
//! date, entries chronologically, everything else by id, id lists sorted.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    Agreer, Contributor, DepartmentTag, Entry, EntryKind, KnowledgeBase, Meeting, MeetingSegment,
    PositionSample, PropertyValue, Rgb, SceneObject, StyleConstraint, Vec3, Zone, ZoneKind,
};
use crate::query::{DateRange, FilterSpec};

/// Upper bounds on collection sizes.
#[derive(Debug, Clone, Copy)]
pub struct Size {
    pub meetings: usize,
    pub contributors: usize,
    pub objects: usize,
    pub entries: usize,
    pub zones: usize,
    pub style_constraints: usize,
}

impl Default for Size {
    fn default() -> Self {
        Self {
            meetings: 4,
            contributors: 5,
            objects: 6,
            entries: 16,
            zones: 4,
            style_constraints: 4,
        }
    }
}

impl Size {
    /// Larger instances for benchmarks.
    pub fn scaled(factor: usize) -> Self {
        let d = Self::default();
        Self {
            meetings: d.meetings * factor,
            contributors: d.contributors * factor,
            objects: d.objects * factor,
            entries: d.entries * factor,
            zones: d.zones * factor,
            style_constraints: d.style_constraints * factor,
        }
    }
}

const PHASES: [&str; 4] = ["pre-production", "layout", "lighting", "final"];
const NAMES: [&str; 6] = ["Alice", "Bob", "Carol", "Dan", "Erin", "Femi"];
const WORDS: [&str; 8] = [
    "river", "camera", "keep", "blue", "tent", "zone", "light", "boat",
];

fn department<R: Rng>(rng: &mut R) -> DepartmentTag {
    match rng.gen_range(0..5) {
        0 => DepartmentTag::Camera,
        1 => DepartmentTag::Lighting,
        2 => DepartmentTag::Director,
        3 => DepartmentTag::Effect,
        _ => DepartmentTag::Other("art".into()),
    }
}

fn coord<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-20.0..20.0)
}

fn point<R: Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(coord(rng), rng.gen_range(0.0..3.0), coord(rng))
}

fn sentence<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..6);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sorted random subset of `ids`, each kept with probability `p`.
fn subset<R: Rng>(rng: &mut R, ids: &[String], p: f64) -> Vec<String> {
    let mut out: Vec<String> = ids.iter().filter(|_| rng.gen_bool(p)).cloned().collect();
    out.sort();
    out
}

fn property_value<R: Rng>(rng: &mut R) -> PropertyValue {
    match rng.gen_range(0..3) {
        0 => PropertyValue::Color(Rgb::new(rng.gen(), rng.gen(), rng.gen())),
        1 => PropertyValue::Scalar(rng.gen_range(-5.0..5.0)),
        _ => PropertyValue::Text(sentence(rng)),
    }
}

/// A random valid knowledge base in canonical order.
pub fn knowledge_base<R: Rng>(rng: &mut R, size: Size) -> KnowledgeBase {
    let mut kb = KnowledgeBase::empty(format!("p{}", rng.gen_range(0..1000)));

    let n_meetings = rng.gen_range(1..=size.meetings.max(1));
    for i in 0..n_meetings {
        // Strictly increasing dates keep meeting order equal to index order.
        let day = 1 + i;
        let date = if rng.gen_bool(0.3) {
            format!(
                "2026-{:02}-{:02}T{:02}:30:00",
                1 + day / 28,
                1 + day % 28,
                9 + i % 8
            )
        } else {
            format!("2026-{:02}-{:02}", 1 + day / 28, 1 + day % 28)
        };
        kb.meetings.push(Meeting {
            meeting_id: format!("m{i:03}"),
            title: sentence(rng),
            phase: PHASES.choose(rng).unwrap().to_string(),
            date,
            duration: rng.gen_range(60.0..3600.0),
            media_ref: format!("media/m{i:03}.mp4"),
        });
    }

    let n_contributors = rng.gen_range(1..=size.contributors.max(1));
    for i in 0..n_contributors {
        kb.contributors.push(Contributor {
            contributor_id: format!("c{i:03}"),
            name: format!("{} {i}", NAMES.choose(rng).unwrap()),
            role: sentence(rng),
            department: department(rng),
        });
    }
    let contributor_ids: Vec<String> = kb
        .contributors
        .iter()
        .map(|c| c.contributor_id.clone())
        .collect();

    let n_objects = rng.gen_range(0..=size.objects);
    for i in 0..n_objects {
        let mut history = Vec::new();
        for m in &kb.meetings {
            if rng.gen_bool(0.5) {
                let mut t = 0.0;
                for _ in 0..rng.gen_range(1..4) {
                    t += rng.gen_range(0.5..m.duration / 4.0);
                    history.push(PositionSample {
                        meeting_id: m.meeting_id.clone(),
                        t,
                        position: point(rng),
                    });
                }
            }
        }
        let aliases = if rng.gen_bool(0.5) {
            vec![sentence(rng)]
        } else {
            vec![]
        };
        kb.scene_objects.push(SceneObject {
            object_id: format!("o{i:03}"),
            display_name: format!("Object {i}"),
            aliases,
            department: rng.gen_bool(0.6).then(|| department(rng)),
            position_history: history,
        });
    }
    let object_ids: Vec<String> = kb
        .scene_objects
        .iter()
        .map(|o| o.object_id.clone())
        .collect();

    let n_entries = rng.gen_range(0..=size.entries);
    let mut segments: Vec<MeetingSegment> = (0..n_entries)
        .map(|_| {
            let m = kb.meetings.choose(rng).unwrap();
            let t_start = rng.gen_range(0.0..m.duration - 1.0);
            let t_end = (t_start + rng.gen_range(0.5..30.0)).min(m.duration);
            MeetingSegment {
                meeting_id: m.meeting_id.clone(),
                t_start,
                t_end,
                media_ref: m.media_ref.clone(),
                ordinal: 0,
            }
        })
        .collect();
    // An exact tie now and then, separated by ordinal.
    if !segments.is_empty() && rng.gen_bool(0.3) {
        let mut twin = segments[0].clone();
        twin.ordinal = 1;
        segments.push(twin);
    }
    let meeting_index = |id: &str| kb.meetings.iter().position(|m| m.meeting_id == id).unwrap();
    segments.sort_by(|a, b| {
        meeting_index(&a.meeting_id)
            .cmp(&meeting_index(&b.meeting_id))
            .then(a.t_start.total_cmp(&b.t_start))
            .then(a.t_end.total_cmp(&b.t_end))
            .then(a.ordinal.cmp(&b.ordinal))
    });
    for (k, segment) in segments.into_iter().enumerate() {
        let editor = contributor_ids.choose(rng).unwrap().clone();
        let mut agreers: Vec<Agreer> = Vec::new();
        for c in &contributor_ids {
            if *c != editor && rng.gen_bool(0.3) {
                let remark = rng.gen_bool(0.4).then(|| sentence(rng));
                agreers.push(Agreer {
                    contributor_id: c.clone(),
                    remark,
                });
            }
        }
        agreers.shuffle(rng);
        kb.entries.push(Entry {
            entry_id: format!("e-{k:04}"),
            kind: if rng.gen_bool(0.6) {
                EntryKind::Decision
            } else {
                EntryKind::Comment
            },
            summary: sentence(rng),
            detail: rng.gen_bool(0.3).then(|| sentence(rng)),
            object_ids: subset(rng, &object_ids, 0.3),
            editor,
            agreers,
            segment,
            linked_constraint_ids: vec![],
            confidence: rng.gen_range(0.0..=1.0),
            needs_review: rng.gen_bool(0.3),
        });
    }
    let entry_ids: Vec<String> = kb.entries.iter().map(|e| e.entry_id.clone()).collect();
    if entry_ids.is_empty() {
        return kb;
    }

    let provenance = |rng: &mut R| {
        let mut ids = subset(rng, &entry_ids, 0.2);
        if ids.is_empty() {
            ids.push(entry_ids.choose(rng).unwrap().clone());
        }
        ids
    };
    for i in 0..rng.gen_range(0..=size.zones) {
        kb.zones.push(Zone {
            zone_id: format!("z-{i:03}"),
            kind: if rng.gen_bool(0.5) {
                ZoneKind::Restriction
            } else {
                ZoneKind::Encouragement
            },
            center: point(rng),
            radius: rng.gen_range(0.1..6.0),
            department: department(rng),
            target_object_ids: subset(rng, &object_ids, 0.3),
            entry_ids: provenance(rng),
        });
    }
    if !object_ids.is_empty() {
        for i in 0..rng.gen_range(0..=size.style_constraints) {
            kb.style_constraints.push(StyleConstraint {
                constraint_id: format!("s-{i:03}"),
                object_id: object_ids.choose(rng).unwrap().clone(),
                property: ["material.color", "opacity", "intensity"]
                    .choose(rng)
                    .unwrap()
                    .to_string(),
                expected: property_value(rng),
                tolerance: rng.gen_range(0.0..0.5),
                message: sentence(rng),
                entry_ids: provenance(rng),
            });
        }
    }

    let links: Vec<(String, String)> = kb
        .zones
        .iter()
        .map(|z| (z.entry_ids[0].clone(), z.zone_id.clone()))
        .chain(
            kb.style_constraints
                .iter()
                .map(|c| (c.entry_ids[0].clone(), c.constraint_id.clone())),
        )
        .collect();
    for (entry_id, constraint_id) in links {
        let entry = kb
            .entries
            .iter_mut()
            .find(|e| e.entry_id == entry_id)
            .unwrap();
        entry.linked_constraint_ids.push(constraint_id);
        entry.linked_constraint_ids.sort();
    }
    kb
}

fn pick<R: Rng>(rng: &mut R, ids: impl IntoIterator<Item = String>) -> Option<BTreeSet<String>> {
    let all: Vec<String> = ids.into_iter().collect();
    if all.is_empty() || !rng.gen_bool(0.4) {
        return None;
    }
    let mut set: BTreeSet<String> = all.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
    if set.is_empty() {
        set.insert(all.choose(rng).unwrap().clone());
    }
    Some(set)
}

/// A random filter whose ids all resolve in `kb`.
pub fn filter<R: Rng>(rng: &mut R, kb: &KnowledgeBase) -> FilterSpec {
    let date_range = (rng.gen_bool(0.3) && !kb.meetings.is_empty()).then(|| {
        let a = kb.meetings.choose(rng).unwrap().date.clone();
        let b = kb.meetings.choose(rng).unwrap().date.clone();
        let (from, to) = if a <= b { (a, b) } else { (b, a) };
        DateRange {
            from: from[..10].to_string(),
            to: to[..10].to_string(),
        }
    });
    let kinds = rng.gen_bool(0.3).then(|| {
        let mut s = BTreeSet::new();
        s.insert(if rng.gen_bool(0.5) {
            EntryKind::Decision
        } else {
            EntryKind::Comment
        });
        s
    });
    FilterSpec {
        object_ids: pick(rng, kb.scene_objects.iter().map(|o| o.object_id.clone())),
        contributor_ids: pick(
            rng,
            kb.contributors.iter().map(|c| c.contributor_id.clone()),
        ),
        phases: pick(
            rng,
            kb.meetings
                .iter()
                .map(|m| m.phase.clone())
                .collect::<BTreeSet<_>>(),
        ),
        meeting_ids: pick(rng, kb.meetings.iter().map(|m| m.meeting_id.clone())),
        kinds,
        date_range,
    }
}
