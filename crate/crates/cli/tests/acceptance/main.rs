//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Set `GROUNDLINK_BLESS=1` to rewrite the session transcripts.

mod canonical;
mod cues;
mod pipeline;
mod query;
mod sessions;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

type Check = fn() -> String;

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else {
        "panicked".into()
    }
}

fn main() -> ExitCode {
    let checks: [(u8, &str, Check); 8] = [
        (1, "canonical round trip", canonical::round_trip),
        (2, "zone cue geometry", cues::zone_geometry),
        (3, "style compliance", cues::style_compliance),
        (
            4,
            "session transcripts and late joins",
            sessions::transcripts_and_late_joins,
        ),
        (5, "concurrent editors converge", sessions::crossfire),
        (6, "pipeline golden output", pipeline::golden),
        (7, "filter semantics", query::filter_semantics),
        (8, "approach cue through the server", sessions::approach),
    ];
    // Keep assertion noise off the summary lines; the message is reported below.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in checks {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("criterion {n}: PASS {name} ({detail})"),
            Err(payload) => {
                failed += 1;
                println!(
                    "criterion {n}: FAIL {name}: {}",
                    panic_message(payload).replace('\n', " | ")
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
