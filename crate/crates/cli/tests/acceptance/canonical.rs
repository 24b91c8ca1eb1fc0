use std::time::Instant;

use groundlink_core::model::{
    canonicalize, load_knowledge_base, save_knowledge_base, validate_references,
};
use groundlink_core::synth;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

/// Independent pretty printer: sorted keys, two-space indent, newline at end.
fn oracle(v: &Value) -> String {
    let mut out = String::new();
    write_sorted(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_sorted(v: &Value, depth: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_sorted(&map[*k], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_sorted(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn shuffle_at(v: &mut Value, key: &str, rng: &mut ChaCha8Rng) {
    if let Some(Value::Array(items)) = v.get_mut(key) {
        items.shuffle(rng);
    }
}

/// Reorders every collection whose order the canonical form fixes.
fn scramble_collections(doc: &mut Value, rng: &mut ChaCha8Rng) {
    for key in [
        "meetings",
        "contributors",
        "scene_objects",
        "entries",
        "zones",
        "style_constraints",
    ] {
        shuffle_at(doc, key, rng);
    }
    let nested: [(&str, &[&str]); 4] = [
        ("scene_objects", &["position_history"]),
        ("entries", &["object_ids", "linked_constraint_ids"]),
        ("zones", &["target_object_ids", "entry_ids"]),
        ("style_constraints", &["entry_ids"]),
    ];
    for (collection, fields) in nested {
        if let Some(Value::Array(items)) = doc.get_mut(collection) {
            for item in items {
                for field in fields {
                    shuffle_at(item, field, rng);
                }
            }
        }
    }
}

/// Serializes with random key order and random insignificant whitespace.
fn write_scrambled(v: &Value, rng: &mut ChaCha8Rng, out: &mut String) {
    const WS: [&str; 5] = ["", " ", "\n", "\t", "  \n  "];
    let ws = |rng: &mut ChaCha8Rng, out: &mut String| out.push_str(WS.choose(rng).unwrap());
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.shuffle(rng);
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                ws(rng, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                ws(rng, out);
                out.push(':');
                ws(rng, out);
                write_scrambled(&map[*k], rng, out);
                ws(rng, out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                ws(rng, out);
                write_scrambled(item, rng, out);
            }
            ws(rng, out);
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn round_trip() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let started = Instant::now();
    let mut with_extra = 0;
    for i in 0..100 {
        let kb = synth::knowledge_base(&mut rng, synth::Size::default());
        let mut doc = serde_json::to_value(&kb).unwrap();
        if rng.gen_bool(0.3) {
            with_extra += 1;
            let mut extra = Map::new();
            extra.insert("tool".into(), Value::String(format!("t{i}")));
            extra.insert("count".into(), Value::from(rng.gen_range(0..100)));
            doc.as_object_mut()
                .unwrap()
                .insert(format!("x_vendor_{i}"), Value::Object(extra));
        }
        let expected = oracle(&doc);

        let mut scrambled = doc.clone();
        scramble_collections(&mut scrambled, &mut rng);
        let mut text = String::new();
        write_scrambled(&scrambled, &mut rng, &mut text);

        let loaded = load_knowledge_base(text.as_bytes())
            .unwrap_or_else(|e| panic!("document {i} rejected: {e}"));
        assert!(
            validate_references(&loaded).is_empty(),
            "document {i}: violations after load"
        );
        let saved = String::from_utf8(save_knowledge_base(&loaded)).unwrap();
        assert!(
            saved == expected,
            "document {i}: save(load(d)) differs from the oracle\n{saved}\n---\n{expected}"
        );
        let canon = canonicalize(text.as_bytes()).unwrap();
        assert!(
            canon == expected.as_bytes(),
            "document {i}: canonicalize differs from the oracle"
        );
        let again = canonicalize(&canon).unwrap();
        assert!(
            again == canon,
            "document {i}: canonical form is not a fixed point"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    format!(
        "100 documents, {with_extra} with extension keys, {:.2} s",
        elapsed.as_secs_f64()
    )
}
