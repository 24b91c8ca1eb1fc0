//! Seeded inputs shared by the benchmarks.

use std::path::PathBuf;

use groundlink_core::model::KnowledgeBase;
use groundlink_core::query::FilterSpec;
use groundlink_core::synth::{self, Size};
use groundlink_core::SceneState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One benchmark input: a knowledge base, the scene it boots into and a
/// filter drawn against it.
pub struct Workload {
    pub kb: KnowledgeBase,
    pub scene: SceneState,
    pub filter: FilterSpec,
}

/// Deterministic workload whose collections are `factor` times the default
/// generator bounds.
pub fn workload(seed: u64, factor: usize) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kb = synth::knowledge_base(&mut rng, Size::scaled(factor));
    let filter = synth::filter(&mut rng, &kb);
    let scene = SceneState::bootstrap(&kb);
    Workload { kb, scene, filter }
}

/// Root of the checked-in fixtures.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
