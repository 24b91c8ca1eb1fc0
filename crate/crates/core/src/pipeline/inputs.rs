use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    build_knowledge_base, parse_transcript, AnnotationEvent, BuildOutput, EditEvent, MeetingInput,
    PipelineConfig, PipelineError, TranscriptFormat,
};
use crate::model::{Contributor, Meeting, SceneObject};

/// One meeting in a project manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMeeting {
    pub meeting_id: String,
    pub title: String,
    pub phase: String,
    pub date: String,
    pub duration: f64,
    pub media_ref: String,
    pub transcript: String,
    #[serde(default)]
    pub edits: Option<String>,
    #[serde(default)]
    pub annotations: Option<String>,
}

impl ManifestMeeting {
    pub fn meeting(&self) -> Meeting {
        Meeting {
            meeting_id: self.meeting_id.clone(),
            title: self.title.clone(),
            phase: self.phase.clone(),
            date: self.date.clone(),
            duration: self.duration,
            media_ref: self.media_ref.clone(),
        }
    }
}

fn default_objects() -> String {
    "objects.json".into()
}

fn default_contributors() -> String {
    "contributors.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub project_id: Option<String>,
    #[serde(default = "default_objects")]
    pub objects: String,
    #[serde(default = "default_contributors")]
    pub contributors: String,
    pub meetings: Vec<ManifestMeeting>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestDocument {
    Full(Manifest),
    Bare(Vec<ManifestMeeting>),
}

/// Everything the pipeline needs, read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectInputs {
    pub project_id: String,
    pub objects: Vec<SceneObject>,
    pub contributors: Vec<Contributor>,
    pub meetings: Vec<MeetingInput>,
    /// Recoverable problems found while reading, e.g. malformed log lines.
    pub diagnostics: Vec<String>,
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a JSONL stream, one record per non-blank line. Malformed lines are
/// reported and skipped.
fn parse_jsonl<T: DeserializeOwned>(bytes: &[u8]) -> (Vec<T>, Vec<PipelineError>) {
    let text = String::from_utf8_lossy(bytes);
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(e) => errors.push(PipelineError::parse(i + 1, e.to_string())),
        }
    }
    (out, errors)
}

pub fn parse_edit_log(bytes: &[u8]) -> (Vec<EditEvent>, Vec<PipelineError>) {
    parse_jsonl(bytes)
}

pub fn parse_annotations(bytes: &[u8]) -> (Vec<AnnotationEvent>, Vec<PipelineError>) {
    parse_jsonl(bytes)
}

fn roster<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))
}

/// Reads a manifest and every file it names. Unreadable files and malformed
/// rosters are errors; malformed transcript or log lines become diagnostics.
pub fn load_manifest(path: &Path) -> Result<ProjectInputs, PipelineError> {
    let bytes = read(path)?;
    let doc: ManifestDocument = serde_json::from_slice(&bytes)
        .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = match doc {
        ManifestDocument::Full(m) => m,
        ManifestDocument::Bare(meetings) => Manifest {
            project_id: None,
            objects: default_objects(),
            contributors: default_contributors(),
            meetings,
        },
    };
    let project_id = manifest.project_id.clone().unwrap_or_else(|| {
        std::fs::canonicalize(&base)
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "project".into())
    });
    let resolve = |rel: &str| -> PathBuf { base.join(rel) };

    let objects = roster(&resolve(&manifest.objects))?;
    let contributors = roster(&resolve(&manifest.contributors))?;
    let mut diagnostics = Vec::new();
    let mut meetings = Vec::new();
    for m in &manifest.meetings {
        let mid = &m.meeting_id;
        let transcript_path = resolve(&m.transcript);
        let format = TranscriptFormat::from_path(&transcript_path).ok_or_else(|| {
            PipelineError::Manifest(format!(
                "{mid}: unknown transcript format `{}`",
                m.transcript
            ))
        })?;
        let utterances = match parse_transcript(&read(&transcript_path)?, format) {
            Ok(t) => {
                for w in t.warnings {
                    diagnostics.push(format!(
                        "{mid}: utterance {} starts at {} before the previous one ends at {}",
                        w.index, w.t_start, w.previous_end
                    ));
                }
                t.utterances
            }
            Err(e) => {
                diagnostics.push(format!("{mid}: transcript {}: {e}", m.transcript));
                Vec::new()
            }
        };
        let edits = match &m.edits {
            Some(rel) => {
                let (edits, errors) = parse_edit_log(&read(&resolve(rel))?);
                diagnostics.extend(
                    errors
                        .into_iter()
                        .map(|e| format!("{mid}: edit log {rel}: {e}")),
                );
                edits
            }
            None => Vec::new(),
        };
        let annotations = match &m.annotations {
            Some(rel) => {
                let (annotations, errors) = parse_annotations(&read(&resolve(rel))?);
                diagnostics.extend(
                    errors
                        .into_iter()
                        .map(|e| format!("{mid}: annotations {rel}: {e}")),
                );
                annotations
            }
            None => Vec::new(),
        };
        meetings.push(MeetingInput {
            meeting: m.meeting(),
            utterances,
            edits,
            annotations,
        });
    }
    Ok(ProjectInputs {
        project_id,
        objects,
        contributors,
        meetings,
        diagnostics,
    })
}

/// Loads a manifest and runs the pipeline over it.
pub fn build_from_manifest(
    path: &Path,
    cfg: &PipelineConfig,
) -> Result<BuildOutput, PipelineError> {
    let inputs = load_manifest(path)?;
    let mut out = build_knowledge_base(
        &inputs.project_id,
        &inputs.meetings,
        &inputs.objects,
        &inputs.contributors,
        cfg,
    )?;
    let mut diagnostics = inputs.diagnostics;
    diagnostics.append(&mut out.report.diagnostics);
    out.report.diagnostics = diagnostics;
    Ok(out)
}
