use super::PipelineError;
use crate::model::{Entry, KnowledgeBase};

/// Entries still awaiting confirmation, in chronological order.
pub fn needs_review_entries(kb: &KnowledgeBase) -> Vec<&Entry> {
    let mut out: Vec<&Entry> = kb.entries.iter().filter(|e| e.needs_review).collect();
    out.sort_by(|a, b| kb.compare_entries(a, b));
    out
}

/// Marks an entry as confirmed by a person.
pub fn confirm_entry(kb: &mut KnowledgeBase, entry_id: &str) -> Result<(), PipelineError> {
    let entry = kb
        .entries
        .iter_mut()
        .find(|e| e.entry_id == entry_id)
        .ok_or_else(|| PipelineError::UnknownEntry(entry_id.to_string()))?;
    entry.needs_review = false;
    entry.confidence = 1.0;
    Ok(())
}
