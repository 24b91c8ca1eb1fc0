//! Name-based entity linking of utterances to scene objects.

use std::collections::BTreeSet;

use super::lexicon::alnum_tokens;
use super::Utterance;
use crate::model::SceneObject;

/// Edit-distance matching ignores tokens shorter than this.
const MIN_FUZZY_TOKEN: usize = 3;

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Best Jaccard overlap between the name's tokens and any utterance window
/// of the same length.
fn window_jaccard(text: &[String], name: &[String]) -> f64 {
    let name_set: BTreeSet<&str> = name.iter().map(String::as_str).collect();
    let width = name.len().min(text.len()).max(1);
    text.windows(width)
        .map(|w| {
            let win: BTreeSet<&str> = w.iter().map(String::as_str).collect();
            let inter = win.intersection(&name_set).count();
            let union = win.union(&name_set).count();
            if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            }
        })
        .fold(0.0, f64::max)
}

fn best_token_similarity(text: &[String], name: &[String]) -> f64 {
    let mut best = 0.0_f64;
    for u in text.iter().filter(|t| t.chars().count() >= MIN_FUZZY_TOKEN) {
        for n in name.iter().filter(|t| t.chars().count() >= MIN_FUZZY_TOKEN) {
            best = best.max(strsim::normalized_levenshtein(u, n));
        }
    }
    best
}

/// Score of one name against an utterance: `1.0` when the full name appears
/// as a token sequence, else the window Jaccard when non-zero, else the best
/// single-token edit similarity.
pub fn name_similarity(text: &str, name: &str) -> f64 {
    let text = alnum_tokens(text);
    let name = alnum_tokens(name);
    if name.is_empty() || text.is_empty() {
        return 0.0;
    }
    if contains_sequence(&text, &name) {
        return 1.0;
    }
    let jaccard = window_jaccard(&text, &name);
    if jaccard > 0.0 {
        return jaccard;
    }
    best_token_similarity(&text, &name)
}

/// Objects whose display name or alias scores at least `threshold`, by
/// descending score then object id.
pub fn link_objects(u: &Utterance, objects: &[SceneObject], threshold: f64) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = objects
        .iter()
        .map(|o| {
            let score = std::iter::once(&o.display_name)
                .chain(o.aliases.iter())
                .map(|n| name_similarity(&u.text, n))
                .fold(0.0, f64::max);
            (o.object_id.clone(), score)
        })
        .filter(|(_, s)| *s >= threshold)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
