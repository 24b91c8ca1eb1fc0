//! Canonical JSON encoding shared by every on-disk and on-wire document.
//!
//! Object keys are sorted lexicographically at every depth, documents are
//! pretty-printed with two-space indentation and end with a single newline.
//! Compact single-line output (used for JSON-lines streams) applies the same
//! key ordering.

use serde::Serialize;
use serde_json::{Map, Value};

/// Recursively rebuilds `value` with object keys in lexicographic order.
pub fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, sort_keys(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty canonical bytes: sorted keys, 2-space indent, trailing newline.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("in-memory values always encode");
    let mut out = serde_json::to_vec_pretty(&sort_keys(value)).expect("Value always encodes");
    out.push(b'\n');
    out
}

/// Compact canonical line without a trailing newline.
pub fn to_canonical_line<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("in-memory values always encode");
    serde_json::to_string(&sort_keys(value)).expect("Value always encodes")
}
