//! Meeting knowledge, scene constraints and live editor synchronization for
//! collaborative 3D previsualization.
//!
//! Meeting transcripts and edit logs are distilled by [`pipeline`] into a
//! [`model::KnowledgeBase`]. The [`engine`] turns its zones and style
//! constraints into visual cues for the current scene, [`query`] filters and
//! summarizes it, and [`sync`] keeps editors and dashboards in one session.

pub mod canonical;
pub mod editor;
pub mod engine;
pub mod model;
pub mod pipeline;
pub mod query;
pub mod sync;
pub mod synth;
#[cfg(test)]
mod testkit;

pub use engine::{
    evaluate_scene, CueSet, EngineError, EngineParams, SceneState, StyleCue, ZoneCue,
};
pub use model::{
    load_knowledge_base, save_knowledge_base, Entry, EntryKind, KnowledgeBase, LoadError,
    PropertyValue, Rgb, StyleConstraint, Vec3, Zone, ZoneKind,
};
pub use query::{
    apply_filter, minimap_traces, FilterSpec, QueryError, ScopedSummary, SummaryBackend,
};
pub use sync::{EventKind, Session, SessionError, SessionSnapshot, SyncEvent};
