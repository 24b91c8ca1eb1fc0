use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use groundlink_cli::client::{EditorClient, SyncClient, WireRecord};
use groundlink_cli::server::{self, RunningServer, ServerConfig};
use groundlink_core::editor::{parse_command, EditorCommand};
use groundlink_core::engine::EngineParams;
use groundlink_core::model::{load_knowledge_base, KnowledgeBase, PropertyValue, Vec3};
use groundlink_core::sync::{
    fold_from, ClientRole, EventKind, ServerFrame, Session, SessionSnapshot, SyncEvent,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{fixtures, golden_dir};

const SCRIPT: [&str; 20] = [
    "select boat",
    "move boat 5 0 0",
    "move boat 3 0 0",
    "seek m1 20",
    "entry e-m1-20000-0",
    "interact zone z-m1-20000-0",
    "set tent material.color blue",
    "set tent material.color rgb(200,10,10)",
    "select tent",
    "move tent -2 0 5",
    r#"filter {"object_ids":["boat"]}"#,
    "set boat opacity 0.3",
    "interact constraint s-m2-190000-0",
    "move key_light 1 3 1",
    "seek m2 65.5",
    "select none",
    "set key_light intensity 0.8",
    "move main_camera 4 1.5 -1",
    "entry e-m2-60000-0",
    "move boat 0 0 0",
];

fn river() -> Arc<KnowledgeBase> {
    Arc::new(
        load_knowledge_base(&std::fs::read(fixtures().join("river.gl.json")).unwrap()).unwrap(),
    )
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap()
}

async fn start(kb: &KnowledgeBase) -> RunningServer {
    server::spawn("127.0.0.1:0", kb.clone(), ServerConfig::default())
        .await
        .unwrap()
}

fn genesis(kb: &Arc<KnowledgeBase>) -> SessionSnapshot {
    Session::new("oracle", Arc::clone(kb), EngineParams::default(), 1)
        .genesis()
        .clone()
}

fn command(line: &str) -> EditorCommand {
    parse_command(line).unwrap().unwrap()
}

/// Reads frames until event `last` has been seen.
async fn collect_until(client: &mut SyncClient, last: u64) {
    loop {
        match client.recv_timeout(Duration::from_secs(5)).await.unwrap() {
            Some(ServerFrame::Event(e)) if e.event_id == last => return,
            Some(_) => {}
            None => panic!("observer stalled before event {last}"),
        }
    }
}

fn received_events(wire: &[WireRecord]) -> Vec<SyncEvent> {
    wire.iter()
        .filter_map(|r| match r {
            WireRecord::Received(ServerFrame::Event(e)) => Some(e.clone()),
            _ => None,
        })
        .collect()
}

fn compare_golden(name: &str, lines: &[String]) {
    let path = golden_dir().join(name);
    let text = lines.join("\n") + "\n";
    if std::env::var_os("GROUNDLINK_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    if want != text {
        let line = want
            .lines()
            .zip(text.lines())
            .position(|(a, b)| a != b)
            .map_or(0, |n| n + 1);
        panic!("{name} differs from golden at line {line}");
    }
}

pub fn transcripts_and_late_joins() -> String {
    let kb = river();
    let started = Instant::now();
    runtime().block_on(async {
        let srv = start(&kb).await;
        let mut editor = EditorClient::connect_with(
            &srv.ws_url(),
            Arc::clone(&kb),
            ClientRole::Editor,
            "golden",
        )
        .await
        .unwrap();
        let mut observer = SyncClient::connect(&srv.ws_url(), ClientRole::Observer, "golden")
            .await
            .unwrap();
        for line in SCRIPT {
            editor.execute(&command(line)).await.unwrap();
        }
        let last = editor.state.snapshot.last_event_id;
        collect_until(&mut observer, last).await;

        // The editor never hears its own events back, only the cue updates they trigger.
        for r in &editor.conn.wire {
            if let WireRecord::Received(ServerFrame::Event(e)) = r {
                assert!(
                    e.origin != editor.conn.client_id
                        || matches!(e.kind, EventKind::CueSetUpdated { .. }),
                    "echo of event {}",
                    e.event_id
                );
            }
        }
        let seen: Vec<u64> = received_events(&observer.wire)
            .iter()
            .map(|e| e.event_id)
            .collect();
        assert_eq!(
            seen,
            (1..=last).collect::<Vec<_>>(),
            "observer sequence has gaps or reordering"
        );
        let mut editor_ids: Vec<u64> = editor.events.iter().map(|e| e.event_id).collect();
        editor_ids.sort_unstable();
        assert_eq!(
            editor_ids,
            (1..=last).collect::<Vec<_>>(),
            "editor saw an id twice or missed one"
        );
        assert_eq!(
            fold_from(
                observer.welcome_snapshot.clone(),
                &received_events(&observer.wire)
            ),
            editor.state.snapshot
        );

        compare_golden("session_editor.jsonl", &editor.transcript(true));
        let observer_lines: Vec<String> = observer.wire.iter().map(|r| r.to_line(true)).collect();
        compare_golden("session_observer.jsonl", &observer_lines);

        // Late joiners receive exactly the fold of everything before them.
        let base = genesis(&kb);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
        for i in 0..50 {
            let session = format!("late-{i}");
            let mut ed = EditorClient::connect_with(
                &srv.ws_url(),
                Arc::clone(&kb),
                ClientRole::Editor,
                &session,
            )
            .await
            .unwrap();
            assert_eq!(
                ed.conn.welcome_snapshot, base,
                "fresh session {session} must start at genesis"
            );
            let cut = rng.gen_range(0..=SCRIPT.len());
            for line in &SCRIPT[..cut] {
                ed.execute(&command(line)).await.unwrap();
            }
            let mut events = ed.events.clone();
            events.sort_by_key(|e| e.event_id);
            let late = SyncClient::connect(&srv.ws_url(), ClientRole::Dashboard, &session)
                .await
                .unwrap();
            assert_eq!(
                late.welcome_snapshot,
                fold_from(base.clone(), &events),
                "late join {i} after {cut} commands"
            );
            late.close().await;
            ed.close().await;
        }
        editor.close().await;
        observer.close().await;
        srv.shutdown().await;
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs_f64() < 10.0,
            "took {elapsed:?}, budget 10 s"
        );
        format!(
            "{last} events, 50 late joins, {:.2} s",
            elapsed.as_secs_f64()
        )
    })
}

fn random_command(rng: &mut ChaCha8Rng, kb: &KnowledgeBase) -> EditorCommand {
    let object = kb.scene_objects.choose(rng).unwrap().object_id.clone();
    let grid = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(-8i32..=8)) / 2.0;
    match rng.gen_range(0..10) {
        0..=4 => EditorCommand::Move {
            object_id: object,
            position: Vec3::new(grid(rng), 0.0, grid(rng)),
        },
        5 | 6 => EditorCommand::Set {
            object_id: object,
            property: "opacity".into(),
            value: PropertyValue::Scalar(f64::from(rng.gen_range(0..=10)) / 10.0),
        },
        7 => EditorCommand::Select(Some(object)),
        8 => EditorCommand::Seek {
            meeting_id: kb.meetings.choose(rng).unwrap().meeting_id.clone(),
            t: f64::from(rng.gen_range(0..600)),
        },
        _ => EditorCommand::InteractZone(kb.zones.choose(rng).unwrap().zone_id.clone()),
    }
}

async fn run_editor(mut client: EditorClient, seed: u64, n: usize) -> (EditorClient, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kb = Arc::new(client.state.knowledge_base().clone());
    let mut scene_changes = 0;
    for _ in 0..n {
        let cmd = random_command(&mut rng, &kb);
        let outcome = client.execute(&cmd).await.unwrap();
        if outcome
            .published
            .as_ref()
            .is_some_and(|e| e.kind.changes_scene())
        {
            scene_changes += 1;
        }
        if rng.gen_bool(0.3) {
            tokio::task::yield_now().await;
        }
    }
    (client, scene_changes)
}

pub fn crossfire() -> String {
    let kb = river();
    runtime().block_on(async {
        let srv = start(&kb).await;
        let a = EditorClient::connect_with(
            &srv.ws_url(),
            Arc::clone(&kb),
            ClientRole::Editor,
            "crossfire",
        )
        .await
        .unwrap();
        let b = EditorClient::connect_with(
            &srv.ws_url(),
            Arc::clone(&kb),
            ClientRole::Editor,
            "crossfire",
        )
        .await
        .unwrap();
        let ta = tokio::spawn(run_editor(a, 0xa, 50));
        let tb = tokio::spawn(run_editor(b, 0xb, 50));
        let (mut a, scene_a) = ta.await.unwrap();
        let (mut b, scene_b) = tb.await.unwrap();
        a.settle(Duration::from_millis(300)).await.unwrap();
        b.settle(Duration::from_millis(300)).await.unwrap();

        let emitted = a.state.emitted + b.state.emitted;
        let last = a.state.snapshot.last_event_id;
        assert_eq!(a.state.snapshot, b.state.snapshot, "editors diverged");
        assert_eq!(last, emitted + scene_a + scene_b, "event count");
        for (name, c) in [("a", &a), ("b", &b)] {
            let ids: Vec<u64> = c.events.iter().map(|e| e.event_id).collect();
            let unique: BTreeSet<u64> = ids.iter().copied().collect();
            assert_eq!(ids.len(), unique.len(), "editor {name} saw an event twice");
            assert_eq!(unique, (1..=last).collect(), "editor {name} missed events");
            assert_eq!(
                c.state.scene.positions, c.state.snapshot.scene.positions,
                "editor {name} scene out of step"
            );
            assert_eq!(c.state.scene.properties, c.state.snapshot.scene.properties);
        }
        let late = SyncClient::connect(&srv.ws_url(), ClientRole::Observer, "crossfire")
            .await
            .unwrap();
        assert_eq!(
            late.welcome_snapshot, a.state.snapshot,
            "server state differs from the editors'"
        );
        late.close().await;
        a.close().await;
        b.close().await;
        srv.shutdown().await;
        format!("{emitted} emitted, {last} events, both editors converged")
    })
}

pub fn approach() -> String {
    let kb = river();
    runtime().block_on(async {
        let srv = start(&kb).await;
        let mut editor = EditorClient::connect_with(
            &srv.ws_url(),
            Arc::clone(&kb),
            ClientRole::Editor,
            "approach",
        )
        .await
        .unwrap();
        let mut seen = Vec::new();
        for x in [5.0, 4.0, 3.0, 1.0] {
            let outcome = editor
                .execute(&EditorCommand::Move {
                    object_id: "boat".into(),
                    position: Vec3::new(x, 0.0, 0.0),
                })
                .await
                .unwrap();
            let ack = outcome.published.expect("move publishes");
            let from_server = editor.events.iter().any(|e| {
                e.event_id == ack.event_id + 1 && matches!(e.kind, EventKind::CueSetUpdated { .. })
            });
            assert!(from_server, "no cue update followed the move to x={x}");
            let cues = editor.state.cues.as_ref().expect("cue set");
            let cue = cues
                .zone_cues
                .iter()
                .find(|c| c.zone_id == "z-m1-20000-0" && c.object_id == "boat")
                .expect("boat cue for the restriction at the origin");
            seen.push(cue.intensity);
        }
        for (got, want) in seen.iter().zip([0.25, 0.5, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-9, "intensities {seen:?}");
        }
        assert!(
            seen.windows(2).all(|w| w[0] < w[1]),
            "intensities must strictly increase: {seen:?}"
        );
        editor.close().await;
        srv.shutdown().await;
        format!("intensities {seen:?}")
    })
}
