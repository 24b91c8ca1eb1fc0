use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::{
    validate_references, Contributor, Entry, KnowledgeBase, Meeting, SceneObject, StyleConstraint,
    Violation, ViolationCode, Zone,
};
use crate::canonical;

pub const SUPPORTED_VERSION: &str = "1";

const KNOWN_KEYS: [&str; 8] = [
    "version",
    "project_id",
    "meetings",
    "contributors",
    "scene_objects",
    "entries",
    "zones",
    "style_constraints",
];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unresolved reference `{id}`")]
    Reference { id: String },
    #[error("unsupported version `{0}` (expected \"1\")")]
    Version(String),
    #[error("{} invariant violation(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: String,
    project_id: String,
    meetings: Vec<Meeting>,
    contributors: Vec<Contributor>,
    scene_objects: Vec<SceneObject>,
    entries: Vec<Entry>,
    zones: Vec<Zone>,
    style_constraints: Vec<StyleConstraint>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses the document structure and version gate without checking
/// cross-references or value invariants. Collections come back normalized.
pub fn parse_knowledge_base(bytes: &[u8]) -> Result<KnowledgeBase, LoadError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| schema("$", format!("invalid UTF-8: {e}")))?;
    let root: Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let Value::Object(map) = root else {
        return Err(schema("$", "top level must be an object"));
    };
    match map.get("version") {
        Some(Value::String(v)) if v == SUPPORTED_VERSION => {}
        Some(Value::String(v)) => return Err(LoadError::Version(v.clone())),
        Some(_) => return Err(schema("version", "expected a string")),
        None => return Err(schema("version", "missing field")),
    }
    let mut known = serde_json::Map::new();
    let mut extra = BTreeMap::new();
    for (k, v) in map {
        if KNOWN_KEYS.contains(&k.as_str()) {
            known.insert(k, v);
        } else {
            extra.insert(k, v);
        }
    }
    let doc: Document = serde_path_to_error::deserialize(Value::Object(known)).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    let mut kb = KnowledgeBase {
        version: doc.version,
        project_id: doc.project_id,
        meetings: doc.meetings,
        contributors: doc.contributors,
        scene_objects: doc.scene_objects,
        entries: doc.entries,
        zones: doc.zones,
        style_constraints: doc.style_constraints,
        extra,
    };
    kb.normalize();
    Ok(kb)
}

/// Parses and fully validates a `*.gl.json` document.
pub fn load_knowledge_base(bytes: &[u8]) -> Result<KnowledgeBase, LoadError> {
    let kb = parse_knowledge_base(bytes)?;
    let violations = validate_references(&kb);
    if violations.is_empty() {
        return Ok(kb);
    }
    if let Some(v) = violations
        .iter()
        .find(|v| v.code == ViolationCode::DanglingReference)
    {
        return Err(LoadError::Reference { id: v.id.clone() });
    }
    Err(LoadError::Invalid(violations))
}

/// Canonical bytes: sorted keys, canonical collection order, 2-space
/// indentation, trailing newline.
pub fn save_knowledge_base(kb: &KnowledgeBase) -> Vec<u8> {
    let mut kb = kb.clone();
    kb.version = SUPPORTED_VERSION.to_string();
    kb.normalize();
    canonical::to_canonical_bytes(&kb)
}

/// Canonical form of a valid document.
pub fn canonicalize(bytes: &[u8]) -> Result<Vec<u8>, LoadError> {
    load_knowledge_base(bytes).map(|kb| save_knowledge_base(&kb))
}
