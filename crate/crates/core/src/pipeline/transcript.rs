//! WebVTT and JSON-lines transcript parsing.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Utterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptFormat {
    Webvtt,
    Jsonl,
}

impl TranscriptFormat {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "vtt" => Some(Self::Webvtt),
            "jsonl" => Some(Self::Jsonl),
            _ => None,
        }
    }
}

/// Two cues overlap in time. Not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapWarning {
    pub index: usize,
    pub t_start: f64,
    pub previous_end: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    /// Ordered by start time.
    pub utterances: Vec<Utterance>,
    pub warnings: Vec<OverlapWarning>,
}

static TIMING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\S+)[ \t]+-->[ \t]+(\S+)(?:[ \t].*)?$").unwrap());
static TIMESTAMP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:(\d+):)?([0-5]\d):([0-5]\d)\.(\d{3})$").unwrap());
static VOICE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<v(?:\.[\w.-]+)*[ \t]+([^>]+)>").unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());
static PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z][A-Za-z0-9 .'_-]{0,40}?):[ \t]+(.+)$").unwrap());

/// Contributor-id style slug of a speaker name: lowercase, runs of other
/// characters collapsed to `_`.
pub fn speaker_slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.trim().chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '-' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let slug = out.trim_matches('_').to_string();
    if slug.is_empty() {
        "unknown".to_string()
    } else {
        slug
    }
}

fn parse_timestamp(s: &str) -> Option<f64> {
    let caps = TIMESTAMP.captures(s)?;
    let hours: f64 = caps.get(1).map_or(Ok(0.0), |h| h.as_str().parse()).ok()?;
    let minutes: f64 = caps[2].parse().ok()?;
    let seconds: f64 = caps[3].parse().ok()?;
    let millis: f64 = caps[4].parse().ok()?;
    Some(hours * 3600.0 + minutes * 60.0 + seconds + millis / 1000.0)
}

fn decode_entities(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Speaker slug and clean text of a cue payload.
fn speaker_and_text(raw: &str) -> (String, String) {
    let voice = VOICE.captures(raw).map(|c| c[1].trim().to_string());
    let text = collapse_ws(&decode_entities(&TAG.replace_all(raw, "")));
    if let Some(name) = voice {
        return (speaker_slug(&name), text);
    }
    if let Some(c) = PREFIX.captures(&text) {
        return (speaker_slug(&c[1]), c[2].trim().to_string());
    }
    ("unknown".to_string(), text)
}

fn parse_webvtt(text: &str) -> Result<Vec<Utterance>, PipelineError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .collect();
    match lines.first() {
        Some((_, first))
            if *first == "WEBVTT"
                || first.starts_with("WEBVTT ")
                || first.starts_with("WEBVTT\t") => {}
        _ => return Err(PipelineError::parse(1, "missing WEBVTT header")),
    }
    let mut blocks: Vec<Vec<(usize, &str)>> = Vec::new();
    let mut current: Vec<(usize, &str)> = Vec::new();
    for &(n, line) in &lines {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push((n, line));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }

    let mut out = Vec::new();
    // The first block holds the header line and any header metadata.
    for block in blocks.into_iter().skip(1) {
        let (first_no, first) = block[0];
        if ["NOTE", "STYLE", "REGION"]
            .iter()
            .any(|k| first == *k || first.starts_with(&format!("{k} ")))
        {
            continue;
        }
        let timing_at = if first.contains("->") { 0 } else { 1 };
        let Some(&(line_no, timing)) = block.get(timing_at) else {
            return Err(PipelineError::parse(
                first_no,
                "cue identifier without timing line",
            ));
        };
        let caps = TIMING.captures(timing.trim()).ok_or_else(|| {
            PipelineError::parse(line_no, format!("malformed cue timing `{timing}`"))
        })?;
        let (Some(start), Some(end)) = (parse_timestamp(&caps[1]), parse_timestamp(&caps[2]))
        else {
            return Err(PipelineError::parse(
                line_no,
                format!("malformed timestamp in `{timing}`"),
            ));
        };
        if start >= end {
            return Err(PipelineError::parse(line_no, "cue ends before it starts"));
        }
        let raw = block[timing_at + 1..]
            .iter()
            .map(|(_, l)| *l)
            .collect::<Vec<_>>()
            .join(" ");
        let (speaker, text) = speaker_and_text(&raw);
        if !text.is_empty() {
            out.push(Utterance {
                t_start: start,
                t_end: end,
                speaker,
                text,
            });
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonLine {
    t_start: f64,
    t_end: f64,
    #[serde(default)]
    speaker: Option<String>,
    text: String,
}

fn parse_jsonl(text: &str) -> Result<Vec<Utterance>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonLine =
            serde_json::from_str(line).map_err(|e| PipelineError::parse(n, e.to_string()))?;
        if !(row.t_start.is_finite()
            && row.t_end.is_finite()
            && 0.0 <= row.t_start
            && row.t_start < row.t_end)
        {
            return Err(PipelineError::parse(
                n,
                "t_start must be >= 0 and before t_end",
            ));
        }
        let text = collapse_ws(&row.text);
        if text.is_empty() {
            continue;
        }
        let speaker = row
            .speaker
            .as_deref()
            .map_or_else(|| "unknown".to_string(), speaker_slug);
        out.push(Utterance {
            t_start: row.t_start,
            t_end: row.t_end,
            speaker,
            text,
        });
    }
    Ok(out)
}

/// Parses a transcript, ordering utterances by start time and collecting
/// overlap warnings.
pub fn parse_transcript(
    bytes: &[u8],
    format: TranscriptFormat,
) -> Result<Transcript, PipelineError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| PipelineError::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut utterances = match format {
        TranscriptFormat::Webvtt => parse_webvtt(text)?,
        TranscriptFormat::Jsonl => parse_jsonl(text)?,
    };
    utterances.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    let warnings = utterances
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].t_start < w[0].t_end)
        .map(|(i, w)| OverlapWarning {
            index: i + 1,
            t_start: w[1].t_start,
            previous_end: w[0].t_end,
        })
        .collect();
    Ok(Transcript {
        utterances,
        warnings,
    })
}
