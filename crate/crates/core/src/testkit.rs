//! A small hand-built knowledge base shared by unit tests.

use crate::model::{
    Agreer, Contributor, DepartmentTag, Entry, EntryKind, KnowledgeBase, Meeting, MeetingSegment,
    PositionSample, PropertyValue, Rgb, SceneObject, StyleConstraint, Vec3, Zone, ZoneKind,
};

fn meeting(id: &str, phase: &str, date: &str) -> Meeting {
    Meeting {
        meeting_id: id.into(),
        title: format!("Review {id}"),
        phase: phase.into(),
        date: date.into(),
        duration: 600.0,
        media_ref: format!("media/{id}.mp4"),
    }
}

fn contributor(id: &str, name: &str, department: DepartmentTag) -> Contributor {
    Contributor {
        contributor_id: id.into(),
        name: name.into(),
        role: "crew".into(),
        department,
    }
}

fn object(id: &str, name: &str, history: Vec<PositionSample>) -> SceneObject {
    SceneObject {
        object_id: id.into(),
        display_name: name.into(),
        aliases: vec![],
        department: None,
        position_history: history,
    }
}

fn entry(
    id: &str,
    kind: EntryKind,
    meeting: &str,
    t: (f64, f64),
    objects: &[&str],
    editor: &str,
) -> Entry {
    Entry {
        entry_id: id.into(),
        kind,
        summary: format!("summary of {id}"),
        detail: None,
        object_ids: objects.iter().map(|s| s.to_string()).collect(),
        editor: editor.into(),
        agreers: vec![],
        segment: MeetingSegment {
            meeting_id: meeting.into(),
            t_start: t.0,
            t_end: t.1,
            media_ref: format!("media/{meeting}.mp4"),
            ordinal: 0,
        },
        linked_constraint_ids: vec![],
        confidence: 0.9,
        needs_review: false,
    }
}

/// Two meetings, two people, a boat with history and a tent without.
///
/// `e1` (m1, decision, ana with ben agreeing) owns restriction `z1` at the
/// origin with radius 2 on the boat; `e2` (m2, comment by ben) flags the tent
/// for review; `e3` (m2, decision by ana) owns style `s1`: tent blue.
pub fn sample() -> KnowledgeBase {
    let mut kb = KnowledgeBase::empty("sample");
    kb.meetings = vec![
        meeting("m1", "layout", "2026-01-05"),
        meeting("m2", "lighting", "2026-01-12T10:00:00Z"),
    ];
    kb.contributors = vec![
        contributor("ana", "Ana Silva", DepartmentTag::Director),
        contributor("ben", "Ben Cole", DepartmentTag::Camera),
    ];
    kb.scene_objects = vec![
        object(
            "boat",
            "Boat",
            vec![
                PositionSample {
                    meeting_id: "m1".into(),
                    t: 30.0,
                    position: Vec3::new(6.0, 0.0, 0.0),
                },
                PositionSample {
                    meeting_id: "m2".into(),
                    t: 5.0,
                    position: Vec3::new(5.0, 0.0, 0.0),
                },
            ],
        ),
        object("tent", "Tent", vec![]),
    ];
    let mut e1 = entry(
        "e1",
        EntryKind::Decision,
        "m1",
        (20.0, 30.0),
        &["boat"],
        "ana",
    );
    e1.agreers = vec![Agreer {
        contributor_id: "ben".into(),
        remark: None,
    }];
    e1.linked_constraint_ids = vec!["z1".into()];
    let mut e2 = entry(
        "e2",
        EntryKind::Comment,
        "m2",
        (40.0, 45.0),
        &["tent"],
        "ben",
    );
    e2.needs_review = true;
    e2.confidence = 0.5;
    let mut e3 = entry(
        "e3",
        EntryKind::Decision,
        "m2",
        (100.0, 110.0),
        &["tent"],
        "ana",
    );
    e3.linked_constraint_ids = vec!["s1".into()];
    kb.entries = vec![e1, e2, e3];
    kb.zones = vec![Zone {
        zone_id: "z1".into(),
        kind: ZoneKind::Restriction,
        center: Vec3::ORIGIN,
        radius: 2.0,
        department: DepartmentTag::Director,
        target_object_ids: vec!["boat".into()],
        entry_ids: vec!["e1".into()],
    }];
    kb.style_constraints = vec![StyleConstraint {
        constraint_id: "s1".into(),
        object_id: "tent".into(),
        property: "material.color".into(),
        expected: PropertyValue::Color(Rgb::new(0, 0, 255)),
        tolerance: 0.0,
        message: "Should be blue".into(),
        entry_ids: vec!["e3".into()],
    }];
    kb
}
