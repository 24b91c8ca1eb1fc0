use groundlink_core::model::{
    save_knowledge_base, validate_references, EntryKind, PropertyValue, Vec3, ZoneKind,
};
use groundlink_core::pipeline::{build_from_manifest, PipelineConfig};

use crate::fixtures;

pub fn golden() -> String {
    let cfg = PipelineConfig::default();

    let synthetic = build_from_manifest(&fixtures().join("synthetic/meetings.json"), &cfg)
        .expect("synthetic build");
    let kb = &synthetic.kb;
    let ids: Vec<&str> = kb.entries.iter().map(|e| e.entry_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "e-s1-10000-0",
            "e-s1-40000-0",
            "e-s1-80000-0",
            "e-s1-100000-0",
            "e-s1-160000-0",
            "e-s1-200000-0"
        ]
    );
    let linked = 0.5 + 0.5 * (1.0 - 4.0 / 30.0);
    let entry = |id: &str| kb.entry(id).unwrap();

    let avoid = entry("e-s1-10000-0");
    assert_eq!(avoid.kind, EntryKind::Decision);
    assert_eq!(avoid.object_ids, ["boat", "dock"]);
    assert_eq!(avoid.editor, "ana");
    assert_eq!(avoid.agreers.len(), 1);
    assert_eq!(avoid.agreers[0].contributor_id, "ben");
    assert_eq!(
        avoid.agreers[0].remark.as_deref(),
        Some("for the whole scene")
    );
    assert_eq!((avoid.segment.t_start, avoid.segment.t_end), (10.0, 20.0));
    assert!((avoid.confidence - linked).abs() < 1e-12);
    assert!(!avoid.needs_review);
    let z = kb.zone("z-s1-10000-0").expect("restriction zone");
    assert_eq!(
        (z.kind, z.center, z.radius),
        (ZoneKind::Restriction, Vec3::new(5.0, 0.0, 0.0), 2.5)
    );
    assert_eq!(z.target_object_ids, ["boat", "dock"]);

    let brighter = entry("e-s1-40000-0");
    assert_eq!(
        (brighter.editor.as_str(), brighter.object_ids.as_slice()),
        ("cy", &["lamp".to_string()][..])
    );
    let s = kb
        .style_constraint("s-s1-40000-0")
        .expect("intensity constraint");
    assert_eq!(s.expected, PropertyValue::Scalar(0.7));
    assert_eq!(s.message, "Intensity should be 0.7");

    let comment = entry("e-s1-80000-0");
    assert_eq!(comment.kind, EntryKind::Comment);
    assert_eq!(comment.confidence, 0.5);
    assert!(comment.needs_review && comment.linked_constraint_ids.is_empty());

    let z = kb.zone("z-s1-100000-0").expect("encouragement zone");
    assert_eq!(
        (z.kind, z.center, z.radius),
        (ZoneKind::Encouragement, Vec3::new(8.0, 0.0, -2.0), 1.5)
    );

    let red = kb
        .style_constraint("s-s1-160000-0")
        .expect("color constraint");
    assert_eq!(
        (red.message.as_str(), red.tolerance),
        ("Should be red", 0.0)
    );

    let unlinked = entry("e-s1-200000-0");
    assert!(unlinked.object_ids.is_empty() && unlinked.needs_review && unlinked.confidence == 0.0);

    let boat: Vec<(f64, Vec3)> = kb
        .object("boat")
        .unwrap()
        .position_history
        .iter()
        .map(|s| (s.t, s.position))
        .collect();
    assert_eq!(
        boat,
        [
            (20.0, Vec3::new(3.0, 0.0, 1.0)),
            (110.0, Vec3::new(8.0, 0.0, -2.0))
        ]
    );

    let expected = std::fs::read(fixtures().join("synthetic/expected.gl.json")).unwrap();
    assert!(
        save_knowledge_base(kb) == expected,
        "synthetic build differs from expected.gl.json"
    );

    let river =
        build_from_manifest(&fixtures().join("river/meetings.json"), &cfg).expect("river build");
    let r = &river.report;
    assert_eq!(
        (r.entries, r.zones, r.constraints, r.needs_review),
        (13, 5, 8, 4),
        "river counts"
    );
    assert!(validate_references(&river.kb).is_empty());
    let committed = std::fs::read(fixtures().join("river.gl.json")).unwrap();
    assert!(
        save_knowledge_base(&river.kb) == committed,
        "fixtures/river.gl.json is stale"
    );
    "synthetic golden matches, river 13 entries / 5 zones / 3 styles / 4 for review".to_string()
}
