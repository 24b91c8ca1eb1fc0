use groundlink_core::model::{
    canonicalize, load_knowledge_base, save_knowledge_base, KnowledgeBase, LoadError,
};
use groundlink_core::synth;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EMPTY_GOLDEN: &str = include_str!("golden/empty.gl.json");

#[test]
fn empty_knowledge_base_matches_golden() {
    assert_eq!(
        String::from_utf8(save_knowledge_base(&KnowledgeBase::empty("p"))).unwrap(),
        EMPTY_GOLDEN
    );
    let compact = r#"{"style_constraints":[],"zones":[],"entries":[],"scene_objects":[],"contributors":[],"meetings":[],"project_id":"p","version":"1"}"#;
    assert_eq!(
        canonicalize(compact.as_bytes()).unwrap(),
        EMPTY_GOLDEN.as_bytes()
    );
}

#[test]
fn load_errors_are_specific() {
    let doc = |patch: &str| EMPTY_GOLDEN.replacen("\"entries\": []", patch, 1);
    assert!(
        matches!(load_knowledge_base(EMPTY_GOLDEN.replace("\"1\"", "\"2\"").as_bytes()), Err(LoadError::Version(v)) if v == "2")
    );
    let bad_entry = doc(r#""entries": [{"entry_id": 3}]"#);
    match load_knowledge_base(bad_entry.as_bytes()) {
        Err(LoadError::Schema { path, .. }) => assert!(path.starts_with("entries[0]"), "{path}"),
        other => panic!("expected schema error, got {other:?}"),
    }
    let dangling = doc(
        r#""entries": [{"entry_id": "e1", "kind": "comment", "summary": "s", "editor": "nobody",
            "segment": {"meeting_id": "m", "t_start": 0, "t_end": 1, "media_ref": "x"},
            "confidence": 0.5, "needs_review": true}]"#,
    );
    assert!(matches!(
        load_knowledge_base(dangling.as_bytes()),
        Err(LoadError::Reference { .. })
    ));
    assert!(matches!(
        load_knowledge_base(b"[]"),
        Err(LoadError::Schema { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_form_is_a_fixed_point(seed in any::<u64>(), scale in 1..4usize) {
        let kb = synth::knowledge_base(&mut ChaCha8Rng::seed_from_u64(seed), synth::Size::scaled(scale));
        let bytes = save_knowledge_base(&kb);
        let loaded = load_knowledge_base(&bytes).unwrap();
        prop_assert_eq!(&loaded, &kb);
        prop_assert_eq!(save_knowledge_base(&loaded), bytes);
    }
}
