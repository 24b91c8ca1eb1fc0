use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use groundlink_cli::client::{usage, ClientError, EditorClient};
use groundlink_cli::server::{self, run_query, QueryRequest, ServerConfig};
use groundlink_core::canonical::to_canonical_line;
use groundlink_core::editor::parse_command;
use groundlink_core::model::{load_knowledge_base, save_knowledge_base, EntryKind, LoadError};
use groundlink_core::pipeline::{
    build_from_manifest, confirm_entry, needs_review_entries, PipelineConfig,
};
use groundlink_core::query::{DateRange, FilterSpec};
use groundlink_core::sync::{DEFAULT_BIND, DEFAULT_SESSION, DEFAULT_SESSION_CAP};
use tokio::io::{AsyncBufReadExt, BufReader};

#[derive(Parser)]
#[command(
    name = "groundlink",
    version,
    about = "Meeting-grounded scene constraints and editor sync"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a knowledge-base file; prints OK or the violations.
    Validate { file: PathBuf },
    /// Build a knowledge base from a meeting manifest.
    Build(BuildArgs),
    /// List or confirm entries awaiting review.
    Review(ReviewArgs),
    /// Filter entries; prints one JSON line per entry.
    Query(QueryArgs),
    /// Run the session server.
    Serve(ServeArgs),
    /// Run the headless editor client, from a script or interactively.
    Edit(EditArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Alignment window, seconds.
    #[arg(long, default_value_t = 30.0)]
    window: f64,
    /// Entity-link threshold.
    #[arg(long, default_value_t = 0.6)]
    theta: f64,
    /// Review threshold.
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "action")]
struct ReviewAction {
    #[arg(long)]
    list: bool,
    #[arg(long, value_name = "ENTRY_ID")]
    confirm: Option<String>,
}

#[derive(Args)]
struct ReviewArgs {
    #[arg(long)]
    kb: PathBuf,
    #[command(flatten)]
    action: ReviewAction,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long = "object")]
    objects: Vec<String>,
    #[arg(long = "contributor")]
    contributors: Vec<String>,
    #[arg(long = "meeting")]
    meetings: Vec<String>,
    #[arg(long = "phase")]
    phases: Vec<String>,
    #[arg(long = "kind", value_parser = ["decision", "comment"])]
    kinds: Vec<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    /// Append the scoped summary as a final line.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, env = "GROUNDLINK_BIND", default_value = DEFAULT_BIND)]
    bind: String,
    #[arg(long, default_value_t = DEFAULT_SESSION_CAP)]
    session_cap: usize,
    /// Serve a built dashboard bundle at `/`.
    #[arg(long, value_name = "DIR", num_args = 0..=1, default_missing_value = "dashboard/dist")]
    ui: Option<PathBuf>,
}

#[derive(Args)]
struct EditArgs {
    /// Server base URL, e.g. http://127.0.0.1:7340.
    #[arg(long, default_value = "http://127.0.0.1:7340")]
    server: String,
    #[arg(long, default_value = DEFAULT_SESSION)]
    session: String,
    /// Command file, one command per line; `-` reads stdin as a script.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Keep `t_wall` values in the transcript instead of a placeholder.
    #[arg(long)]
    raw_times: bool,
}

fn load(path: &Path) -> Result<groundlink_core::KnowledgeBase> {
    load_knowledge_base(
        &std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?,
    )
    .map_err(|e| describe_load_error(path, e))
}

fn describe_load_error(path: &Path, e: LoadError) -> anyhow::Error {
    match e {
        LoadError::Invalid(violations) => {
            let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
            anyhow::anyhow!(
                "{}: {} violation(s)\n{}",
                path.display(),
                violations.len(),
                lines.join("\n")
            )
        }
        other => anyhow::anyhow!("{}: {other}", path.display()),
    }
}

fn write_canonical(path: &Path, kb: &groundlink_core::KnowledgeBase) -> Result<()> {
    let bytes = save_knowledge_base(kb);
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn validate(file: &Path) -> Result<()> {
    load(file)?;
    println!("OK");
    Ok(())
}

fn build(args: &BuildArgs) -> Result<()> {
    let cfg = PipelineConfig {
        window: args.window,
        link_threshold: args.theta,
        review_threshold: args.rho,
        ..PipelineConfig::default()
    };
    let out = build_from_manifest(&args.manifest, &cfg)?;
    for d in &out.report.diagnostics {
        eprintln!("warning: {d}");
    }
    write_canonical(&args.out, &out.kb)?;
    let r = &out.report;
    let counts = serde_json::json!({
        "entries": r.entries,
        "zones": r.zones,
        "constraints": r.constraints,
        "needs_review": r.needs_review,
    });
    println!("{}", to_canonical_line(&counts));
    Ok(())
}

fn review(args: &ReviewArgs) -> Result<()> {
    let mut kb = load(&args.kb)?;
    if let Some(id) = &args.action.confirm {
        confirm_entry(&mut kb, id)?;
        write_canonical(&args.kb, &kb)?;
        eprintln!("confirmed {id}");
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for entry in needs_review_entries(&kb) {
        writeln!(out, "{}", to_canonical_line(entry))?;
    }
    Ok(())
}

fn set_of(items: &[String]) -> Option<BTreeSet<String>> {
    (!items.is_empty()).then(|| items.iter().cloned().collect())
}

fn query(args: &QueryArgs) -> Result<()> {
    let kb = load(&args.kb)?;
    let date_range = match (&args.from, &args.to) {
        (None, None) => None,
        (Some(from), Some(to)) => Some(DateRange {
            from: from.clone(),
            to: to.clone(),
        }),
        _ => bail!("--from and --to must be given together"),
    };
    let kinds = (!args.kinds.is_empty()).then(|| {
        args.kinds
            .iter()
            .map(|k| {
                if k == "decision" {
                    EntryKind::Decision
                } else {
                    EntryKind::Comment
                }
            })
            .collect()
    });
    let filter = FilterSpec {
        object_ids: set_of(&args.objects),
        contributor_ids: set_of(&args.contributors),
        phases: set_of(&args.phases),
        meeting_ids: set_of(&args.meetings),
        kinds,
        date_range,
    };
    let resp = run_query(
        &kb,
        &QueryRequest {
            filter,
            summary: args.summary,
        },
    )?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for entry in &resp.entries {
        writeln!(out, "{}", to_canonical_line(entry))?;
    }
    if let Some(summary) = &resp.summary {
        writeln!(
            out,
            "{}",
            to_canonical_line(&serde_json::json!({ "summary": summary }))
        )?;
    }
    Ok(())
}

async fn serve(args: &ServeArgs) -> Result<()> {
    let kb = load(&args.kb)?;
    if args.session_cap == 0 {
        bail!("--session-cap must be at least 1");
    }
    if let Some(dir) = &args.ui {
        if !dir.is_dir() {
            bail!("dashboard bundle not found at {}", dir.display());
        }
    }
    let config = ServerConfig {
        session_cap: args.session_cap,
        ui_dir: args.ui.clone(),
        ..ServerConfig::default()
    };
    let running = server::spawn(&args.bind, kb, config)
        .await
        .with_context(|| format!("cannot bind {}", args.bind))?;
    eprintln!("listening on {}", running.http_url());
    tokio::select! {
        r = running.wait() => r?,
        _ = tokio::signal::ctrl_c() => eprintln!("shutting down"),
    }
    Ok(())
}

struct Printer {
    printed: usize,
    normalize: bool,
}

impl Printer {
    fn flush(&mut self, client: &EditorClient, extra: &[String]) -> Result<()> {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        for record in &client.conn.wire[self.printed..] {
            writeln!(out, "{}", record.to_line(self.normalize))?;
        }
        self.printed = client.conn.wire.len();
        for line in extra {
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }
}

async fn edit(args: &EditArgs) -> Result<()> {
    let mut client = EditorClient::connect(&args.server, &args.session).await?;
    let mut printer = Printer {
        printed: 0,
        normalize: !args.raw_times,
    };
    printer.flush(&client, &[])?;
    match &args.script {
        Some(path) => {
            let text = if path.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())?
            } else {
                std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?
            };
            for (n, line) in text.lines().enumerate() {
                let Some(cmd) =
                    parse_command(line).with_context(|| format!("script line {}", n + 1))?
                else {
                    continue;
                };
                let outcome = client
                    .execute(&cmd)
                    .await
                    .with_context(|| format!("script line {}", n + 1))?;
                printer.flush(&client, &outcome.output)?;
                if outcome.quit {
                    break;
                }
            }
            client.settle(Duration::from_millis(100)).await?;
            printer.flush(&client, &[])?;
        }
        None => {
            let mut lines = BufReader::new(tokio::io::stdin()).lines();
            loop {
                tokio::select! {
                    line = lines.next_line() => {
                        let Some(line) = line? else { break };
                        match client.execute_line(&line).await {
                            Ok(outcome) => {
                                printer.flush(&client, &outcome.output)?;
                                if outcome.quit {
                                    break;
                                }
                            }
                            Err(ClientError::Command(e)) => eprintln!("{e}\n{}", usage()),
                            Err(e) => return Err(e.into()),
                        }
                    }
                    frame = client.conn.recv_timeout(Duration::from_secs(3600)) => {
                        if let Some(frame) = frame? {
                            client.absorb(frame)?;
                            printer.flush(&client, &[])?;
                        }
                    }
                }
            }
        }
    }
    client.close().await;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let result = match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Build(args) => build(args),
        Command::Review(args) => review(args),
        Command::Query(args) => query(args),
        Command::Serve(args) => runtime().and_then(|rt| rt.block_on(serve(args))),
        Command::Edit(args) => runtime().and_then(|rt| rt.block_on(edit(args))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}
