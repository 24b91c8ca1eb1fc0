use groundlink_core::model::{Entry, KnowledgeBase};
use groundlink_core::query::{apply_filter, FilterSpec};
use groundlink_core::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Straight transcription of the filter rules, one clause at a time.
fn brute_force(kb: &KnowledgeBase, f: &FilterSpec, e: &Entry) -> bool {
    let meeting = kb
        .meetings
        .iter()
        .find(|m| m.meeting_id == e.segment.meeting_id)
        .unwrap();
    let mut ok = true;
    if let Some(objects) = &f.object_ids {
        ok &= e.object_ids.iter().any(|o| objects.contains(o));
    }
    if let Some(people) = &f.contributor_ids {
        ok &= people.contains(&e.editor)
            || e.agreers.iter().any(|a| people.contains(&a.contributor_id));
    }
    if let Some(phases) = &f.phases {
        ok &= phases.contains(&meeting.phase);
    }
    if let Some(meetings) = &f.meeting_ids {
        ok &= meetings.contains(&meeting.meeting_id);
    }
    if let Some(kinds) = &f.kinds {
        ok &= kinds.contains(&e.kind);
    }
    if let Some(range) = &f.date_range {
        // Day-granular bounds compare lexically on ISO dates.
        assert_eq!(
            (range.from.len(), range.to.len()),
            (10, 10),
            "generator yields plain dates"
        );
        let day = &meeting.date[..10];
        ok &= range.from.as_str() <= day && day <= range.to.as_str();
    }
    ok
}

fn ids<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> Vec<&'a str> {
    entries.into_iter().map(|e| e.entry_id.as_str()).collect()
}

/// `base` plus every clause of `extra` that `base` leaves open.
fn tighten(base: &FilterSpec, extra: &FilterSpec) -> (FilterSpec, usize) {
    let mut f = base.clone();
    let mut added = 0;
    macro_rules! fill {
        ($field:ident) => {
            if f.$field.is_none() && extra.$field.is_some() {
                f.$field = extra.$field.clone();
                added += 1;
            }
        };
    }
    fill!(object_ids);
    fill!(contributor_ids);
    fill!(phases);
    fill!(meeting_ids);
    fill!(kinds);
    fill!(date_range);
    (f, added)
}

pub fn filter_semantics() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut nonempty = 0;
    let mut tightened = 0;
    for i in 0..200 {
        let kb = synth::knowledge_base(&mut rng, synth::Size::default());
        let f = synth::filter(&mut rng, &kb);
        let got = ids(apply_filter(&kb, &f).unwrap());
        let want = ids(kb.entries.iter().filter(|e| brute_force(&kb, &f, e)));
        assert_eq!(got, want, "pair {i}: filter {f:?}");
        nonempty += usize::from(!got.is_empty());

        let (narrower, added) = tighten(&f, &synth::filter(&mut rng, &kb));
        if added > 0 {
            tightened += 1;
            let smaller = ids(apply_filter(&kb, &narrower).unwrap());
            assert!(
                smaller.iter().all(|id| got.contains(id)),
                "pair {i}: added clause grew the result"
            );
        }
    }
    format!("200 pairs, {nonempty} non-empty, {tightened} tightened")
}
