//! Annotation, prediction and confidence files.
//!
//! All three inputs are JSON Lines. Blank lines and objects carrying a
//! top-level `"header"` key (written by the CLI to record the producing
//! configuration) are skipped.
//!
//! Annotation lines:
//! `{"procedure_id","toy_or_task_id","actor_id","step_index","action_name","start_frame","end_frame","is_mistake","mistake_type"}`
//!
//! Prediction lines: `{"video_id","frame","action_id","score"}`
//!
//! Confidence lines: `{"video_id","frame","confidence"}`

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::types::{
    ActionId, ActionVocabulary, MistakeType, Procedure, ProcedureError, StepRecord, VocabularyError,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("procedure {procedure:?}: step_index values are not contiguous (expected {expected}, found {found})")]
    NonContiguousSteps {
        procedure: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown mistake type {value:?}")]
    UnknownMistakeType { line: usize, value: String },
    #[error("line {line}: action {name:?} is not in the vocabulary")]
    UnknownActionName { line: usize, name: String },
    #[error("line {line}: procedure {procedure:?} changes its {field}")]
    InconsistentHeader {
        line: usize,
        procedure: String,
        field: &'static str,
    },
    #[error("video {video_id:?}: frame {frame} does not follow frame {previous}")]
    OutOfOrderFrames {
        video_id: String,
        frame: u64,
        previous: u64,
    },
    #[error("video {video_id:?}: action id {action} outside vocabulary of size {size}")]
    UnknownAction {
        video_id: String,
        action: ActionId,
        size: usize,
    },
    #[error(transparent)]
    Procedure(#[from] ProcedureError),
    #[error("line {line}: {source}")]
    Vocabulary {
        line: usize,
        #[source]
        source: VocabularyError,
    },
}

#[derive(Debug, Deserialize)]
struct AnnotationLine {
    procedure_id: String,
    toy_or_task_id: String,
    actor_id: String,
    step_index: usize,
    action_name: String,
    #[serde(default)]
    start_frame: Option<u64>,
    #[serde(default)]
    end_frame: Option<u64>,
    is_mistake: bool,
    #[serde(default)]
    mistake_type: Option<String>,
}

/// Owned form of one annotation line, used when writing annotation files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnnotationRecord {
    pub procedure_id: String,
    pub toy_or_task_id: String,
    pub actor_id: String,
    pub step_index: usize,
    pub action_name: String,
    pub start_frame: Option<u64>,
    pub end_frame: Option<u64>,
    pub is_mistake: bool,
    pub mistake_type: Option<MistakeType>,
}

/// Flattens procedures into annotation lines.
pub fn annotation_records(
    procedures: &[Procedure],
    vocab: &ActionVocabulary,
) -> Vec<AnnotationRecord> {
    procedures
        .iter()
        .flat_map(|p| {
            p.steps.iter().map(move |s| AnnotationRecord {
                procedure_id: p.procedure_id.clone(),
                toy_or_task_id: p.toy_or_task_id.clone(),
                actor_id: p.actor_id.clone(),
                step_index: s.step_index,
                action_name: vocab.name(s.action).unwrap_or_default().to_string(),
                start_frame: s.start_frame,
                end_frame: s.end_frame,
                is_mistake: s.is_mistake,
                mistake_type: s.mistake_type,
            })
        })
        .collect()
}

/// A per-frame output of a step recognizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub video_id: String,
    pub frame: u64,
    pub action_id: ActionId,
    /// Parsed for format compatibility; detection does not threshold on it.
    #[serde(default)]
    pub score: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ConfidenceLine {
    video_id: String,
    frame: u64,
    confidence: f64,
}

/// Parsed annotation file.
#[derive(Debug, Clone)]
pub struct Annotations {
    pub procedures: Vec<Procedure>,
    pub vocab: ActionVocabulary,
}

impl Annotations {
    pub fn get(&self, procedure_id: &str) -> Option<&Procedure> {
        self.procedures
            .iter()
            .find(|p| p.procedure_id == procedure_id)
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Iterates `(line_number, object)` over the data lines of a JSONL stream.
fn json_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, Value), IngestError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                return Some(Err(IngestError::Parse {
                    line: line_no,
                    message: e.to_string(),
                }))
            }
        };
        if line.trim().is_empty() {
            return None;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(v) if v.get("header").is_some() => None,
            Ok(v) => Some(Ok((line_no, v))),
            Err(e) => Some(Err(IngestError::Parse {
                line: line_no,
                message: e.to_string(),
            })),
        }
    })
}

fn typed<T: serde::de::DeserializeOwned>(line: usize, v: Value) -> Result<T, IngestError> {
    serde_json::from_value(v).map_err(|e| IngestError::Parse {
        line,
        message: e.to_string(),
    })
}

pub fn parse_annotations(
    path: &Path,
    vocab: Option<&ActionVocabulary>,
) -> Result<Annotations, IngestError> {
    read_annotations(open(path)?, vocab)
}

/// Parses annotation lines into procedures grouped by `procedure_id`, in
/// order of first appearance, with steps sorted by `step_index`.
///
/// When `vocab` is given every action name must already be in it; otherwise
/// a vocabulary is built in first-occurrence order.
pub fn read_annotations<R: BufRead>(
    reader: R,
    vocab: Option<&ActionVocabulary>,
) -> Result<Annotations, IngestError> {
    let mut built = vocab.cloned().unwrap_or_else(ActionVocabulary::empty);
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (String, String, Vec<StepRecord>)> = HashMap::new();

    for item in json_lines(reader) {
        let (line, value) = item?;
        let rec: AnnotationLine = typed(line, value)?;
        let mistake_type = match rec.mistake_type.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<MistakeType>()
                    .map_err(|e| IngestError::UnknownMistakeType { line, value: e.0 })?,
            ),
        };
        if mistake_type.is_some() && !rec.is_mistake {
            return Err(IngestError::Parse {
                line,
                message: "mistake_type given for a step with is_mistake=false".into(),
            });
        }
        let action = if vocab.is_some() {
            built
                .id(&rec.action_name)
                .ok_or_else(|| IngestError::UnknownActionName {
                    line,
                    name: rec.action_name.clone(),
                })?
        } else {
            built
                .intern(&rec.action_name)
                .map_err(|source| IngestError::Vocabulary { line, source })?
        };
        let step = StepRecord {
            step_index: rec.step_index,
            action,
            start_frame: rec.start_frame,
            end_frame: rec.end_frame,
            is_mistake: rec.is_mistake,
            mistake_type,
        };
        match groups.get_mut(&rec.procedure_id) {
            Some((task, actor, steps)) => {
                if *task != rec.toy_or_task_id {
                    return Err(IngestError::InconsistentHeader {
                        line,
                        procedure: rec.procedure_id,
                        field: "toy_or_task_id",
                    });
                }
                if *actor != rec.actor_id {
                    return Err(IngestError::InconsistentHeader {
                        line,
                        procedure: rec.procedure_id,
                        field: "actor_id",
                    });
                }
                steps.push(step);
            }
            None => {
                order.push(rec.procedure_id.clone());
                groups.insert(
                    rec.procedure_id,
                    (rec.toy_or_task_id, rec.actor_id, vec![step]),
                );
            }
        }
    }

    let mut procedures = Vec::with_capacity(order.len());
    for id in order {
        let (task, actor, mut steps) = groups.remove(&id).expect("grouped above");
        steps.sort_by_key(|s| s.step_index);
        for (expected, s) in steps.iter().enumerate() {
            if s.step_index != expected {
                return Err(IngestError::NonContiguousSteps {
                    procedure: id,
                    expected,
                    found: s.step_index,
                });
            }
        }
        procedures.push(Procedure::new(id, task, actor, steps)?);
    }
    Ok(Annotations {
        procedures,
        vocab: built,
    })
}

pub fn parse_predictions(path: &Path) -> Result<Vec<FramePrediction>, IngestError> {
    read_predictions(open(path)?)
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<FramePrediction>, IngestError> {
    json_lines(reader)
        .map(|item| item.and_then(|(line, v)| typed(line, v)))
        .collect()
}

/// Groups predictions by video in order of first appearance, checking that
/// frames within each video strictly increase.
pub fn group_predictions(
    predictions: Vec<FramePrediction>,
) -> Result<Vec<(String, Vec<FramePrediction>)>, IngestError> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<(String, Vec<FramePrediction>)> = Vec::new();
    for p in predictions {
        let slot = *index.entry(p.video_id.clone()).or_insert_with(|| {
            out.push((p.video_id.clone(), Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(p);
    }
    for (_, frames) in &out {
        check_frame_order(frames)?;
    }
    Ok(out)
}

fn check_frame_order(predictions: &[FramePrediction]) -> Result<(), IngestError> {
    for w in predictions.windows(2) {
        if w[1].frame <= w[0].frame {
            return Err(IngestError::OutOfOrderFrames {
                video_id: w[1].video_id.clone(),
                frame: w[1].frame,
                previous: w[0].frame,
            });
        }
    }
    Ok(())
}

/// Per-video confidence traces, ordered by frame.
pub fn parse_confidence(path: &Path) -> Result<HashMap<String, Vec<f64>>, IngestError> {
    read_confidence(open(path)?)
}

pub fn read_confidence<R: BufRead>(reader: R) -> Result<HashMap<String, Vec<f64>>, IngestError> {
    let mut traces: HashMap<String, Vec<(u64, f64)>> = HashMap::new();
    for item in json_lines(reader) {
        let (line, v) = item?;
        let c: ConfidenceLine = typed(line, v)?;
        if !(0.0..=1.0).contains(&c.confidence) {
            return Err(IngestError::Parse {
                line,
                message: format!("confidence {} outside [0, 1]", c.confidence),
            });
        }
        traces
            .entry(c.video_id)
            .or_default()
            .push((c.frame, c.confidence));
    }
    Ok(traces
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(f, _)| *f);
            (k, v.into_iter().map(|(_, c)| c).collect())
        })
        .collect())
}

/// Attaches confidence traces to procedures whose id matches a video id.
pub fn attach_confidence(procedures: &mut [Procedure], traces: &HashMap<String, Vec<f64>>) {
    for p in procedures {
        if let Some(t) = traces.get(&p.procedure_id) {
            if !t.is_empty() {
                p.confidence = Some(t.clone());
            }
        }
    }
}

/// One deduplicated step of a prediction stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub action: ActionId,
    pub first_frame: u64,
}

/// Collapses runs of identical consecutive predictions into single steps.
pub fn dedup_segments(predictions: &[FramePrediction]) -> Result<Vec<Segment>, IngestError> {
    check_frame_order(predictions)?;
    let mut out: Vec<Segment> = Vec::new();
    for p in predictions {
        if out.last().map(|s| s.action) != Some(p.action_id) {
            out.push(Segment {
                action: p.action_id,
                first_frame: p.frame,
            });
        }
    }
    Ok(out)
}

/// Run-length collapse of a frame-ordered prediction stream: the output has
/// no two equal adjacent actions, though an action may reappear later.
pub fn dedup_stream(predictions: &[FramePrediction]) -> Result<Vec<ActionId>, IngestError> {
    Ok(dedup_segments(predictions)?
        .into_iter()
        .map(|s| s.action)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Oracle,
    Predicted,
}

/// Where recognized actions come from: ground-truth annotations, or a
/// recognizer's per-frame predictions.
#[derive(Debug, Clone)]
pub enum TranscriptSource {
    Oracle {
        origin: PathBuf,
        procedures: Vec<Procedure>,
    },
    Predicted {
        origin: PathBuf,
        streams: Vec<(String, Vec<FramePrediction>)>,
    },
}

impl TranscriptSource {
    pub fn kind(&self) -> SourceKind {
        match self {
            TranscriptSource::Oracle { .. } => SourceKind::Oracle,
            TranscriptSource::Predicted { .. } => SourceKind::Predicted,
        }
    }

    pub fn origin(&self) -> &Path {
        match self {
            TranscriptSource::Oracle { origin, .. }
            | TranscriptSource::Predicted { origin, .. } => origin,
        }
    }
}

/// The recognized step sequence of one procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSequence {
    pub procedure_id: String,
    pub actions: Vec<ActionId>,
    /// First frame of each deduplicated step, for predicted sources.
    pub first_frames: Option<Vec<u64>>,
}

/// Turns a source into per-procedure action sequences: oracle sources pass
/// annotated actions through, predicted sources are deduplicated.
pub fn to_step_sequences(
    source: &TranscriptSource,
    vocab: &ActionVocabulary,
) -> Result<Vec<StepSequence>, IngestError> {
    match source {
        TranscriptSource::Oracle { procedures, .. } => Ok(procedures
            .iter()
            .map(|p| StepSequence {
                procedure_id: p.procedure_id.clone(),
                actions: p.actions(),
                first_frames: None,
            })
            .collect()),
        TranscriptSource::Predicted { streams, .. } => streams
            .iter()
            .map(|(video_id, frames)| {
                if let Some(bad) = frames.iter().find(|f| !vocab.contains(f.action_id)) {
                    return Err(IngestError::UnknownAction {
                        video_id: video_id.clone(),
                        action: bad.action_id,
                        size: vocab.len(),
                    });
                }
                let segs = dedup_segments(frames)?;
                Ok(StepSequence {
                    procedure_id: video_id.clone(),
                    actions: segs.iter().map(|s| s.action).collect(),
                    first_frames: Some(segs.iter().map(|s| s.first_frame).collect()),
                })
            })
            .collect(),
    }
}

/// Drops predictions after the last annotated frame of `procedure`, so a
/// stream can be scored against a trimmed annotation.
pub fn clip_to_procedure(
    frames: &[FramePrediction],
    procedure: &Procedure,
) -> Vec<FramePrediction> {
    match procedure.steps.last().and_then(|s| s.end_frame) {
        Some(end) => frames.iter().filter(|f| f.frame <= end).cloned().collect(),
        None => frames.to_vec(),
    }
}

/// Ground-truth label for each recognized step.
///
/// Without frame information the steps correspond 1:1 to the annotation and
/// `None` is returned on a length mismatch. With frames, each step takes the
/// label of the annotated step whose span contains its first frame; steps
/// that fall in no span are labelled correct.
pub fn align_labels(sequence: &StepSequence, procedure: &Procedure) -> Option<Vec<bool>> {
    match &sequence.first_frames {
        None => {
            if sequence.actions.len() == procedure.len() {
                Some(procedure.labels())
            } else {
                None
            }
        }
        Some(frames) => Some(frame_labels(frames, procedure)),
    }
}

/// Span-containment labelling used for predicted sources.
pub fn frame_labels(first_frames: &[u64], procedure: &Procedure) -> Vec<bool> {
    first_frames
        .iter()
        .map(|&f| {
            procedure
                .steps
                .iter()
                .find(|s| s.contains_frame(f))
                .map(|s| s.is_mistake)
                .unwrap_or(false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frames(actions: &[u32]) -> Vec<FramePrediction> {
        actions
            .iter()
            .enumerate()
            .map(|(i, a)| FramePrediction {
                video_id: "v".into(),
                frame: i as u64,
                action_id: ActionId(*a),
                score: None,
            })
            .collect()
    }

    fn line(pid: &str, idx: usize, name: &str, mistake: Option<&str>) -> String {
        serde_json::json!({
            "procedure_id": pid, "toy_or_task_id": "toy", "actor_id": "actor",
            "step_index": idx, "action_name": name,
            "start_frame": idx * 10, "end_frame": idx * 10 + 9,
            "is_mistake": mistake.is_some(), "mistake_type": mistake,
        })
        .to_string()
    }

    #[test]
    fn minimal_parse() {
        let text = [
            line("p1", 0, "attach wheel", None),
            line("p1", 1, "screw nut", None),
        ]
        .join("\n");
        let ann = read_annotations(text.as_bytes(), None).unwrap();
        assert_eq!(ann.procedures.len(), 1);
        assert_eq!(ann.procedures[0].len(), 2);
        assert_eq!(ann.vocab.len(), 2);
    }

    #[test]
    fn steps_are_sorted_and_grouped() {
        let text = [
            line("p1", 1, "b", None),
            line("p2", 0, "a", None),
            line("p1", 0, "a", None),
        ]
        .join("\n");
        let ann = read_annotations(text.as_bytes(), None).unwrap();
        assert_eq!(ann.procedures[0].procedure_id, "p1");
        // "b" is seen first and gets id 0
        assert_eq!(ann.procedures[0].actions(), ActionId::seq(&[1, 0]));
        assert_eq!(ann.procedures[1].procedure_id, "p2");
    }

    #[test]
    fn gap_in_step_index() {
        let text = [line("p1", 0, "a", None), line("p1", 2, "b", None)].join("\n");
        assert!(matches!(
            read_annotations(text.as_bytes(), None),
            Err(IngestError::NonContiguousSteps {
                expected: 1,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn non_procedural_mistake_type_rejected() {
        for bad in ["slow", "search", "misuse", "motor", "failure"] {
            let text = line("p1", 0, "a", Some(bad));
            assert!(matches!(
                read_annotations(text.as_bytes(), None),
                Err(IngestError::UnknownMistakeType { line: 1, .. })
            ));
        }
        for ok in ["order", "omit", "correction", "repeat"] {
            assert!(read_annotations(line("p1", 0, "a", Some(ok)).as_bytes(), None).is_ok());
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let text = format!("{}\n{{not json\n", line("p1", 0, "a", None));
        assert!(matches!(
            read_annotations(text.as_bytes(), None),
            Err(IngestError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn header_and_blank_lines_skipped() {
        let text = format!(
            "{{\"header\":{{\"seed\":1}}}}\n\n{}\n",
            line("p1", 0, "a", None)
        );
        assert_eq!(
            read_annotations(text.as_bytes(), None)
                .unwrap()
                .procedures
                .len(),
            1
        );
    }

    #[test]
    fn provided_vocabulary_is_enforced() {
        let vocab = ActionVocabulary::build(&["x", "a"]).unwrap();
        let ann = read_annotations(line("p1", 0, "a", None).as_bytes(), Some(&vocab)).unwrap();
        assert_eq!(ann.procedures[0].steps[0].action, ActionId(1));
        assert!(matches!(
            read_annotations(line("p1", 0, "zzz", None).as_bytes(), Some(&vocab)),
            Err(IngestError::UnknownActionName { .. })
        ));
    }

    #[test]
    fn inconsistent_task_rejected() {
        let mut second: Value = serde_json::from_str(&line("p1", 1, "b", None)).unwrap();
        second["toy_or_task_id"] = "other".into();
        let text = format!("{}\n{}", line("p1", 0, "a", None), second);
        assert!(matches!(
            read_annotations(text.as_bytes(), None),
            Err(IngestError::InconsistentHeader {
                field: "toy_or_task_id",
                ..
            })
        ));
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(
            dedup_stream(&frames(&[0, 0, 0, 1, 1, 0])).unwrap(),
            ActionId::seq(&[0, 1, 0])
        );
        assert_eq!(dedup_stream(&frames(&[4])).unwrap(), ActionId::seq(&[4]));
        assert_eq!(dedup_stream(&[]).unwrap(), vec![]);
    }

    #[test]
    fn dedup_rejects_out_of_order() {
        let mut f = frames(&[1, 2, 3]);
        f[2].frame = 1;
        assert!(matches!(
            dedup_stream(&f),
            Err(IngestError::OutOfOrderFrames {
                frame: 1,
                previous: 1,
                ..
            })
        ));
    }

    #[test]
    fn oracle_and_predicted_sources() {
        let p = Procedure::from_actions("v", "t", &ActionId::seq(&[3, 1])).unwrap();
        let vocab = ActionVocabulary::build(&["a", "b", "c", "d", "e", "f"]).unwrap();
        let oracle = TranscriptSource::Oracle {
            origin: "ann.jsonl".into(),
            procedures: vec![p],
        };
        assert_eq!(
            to_step_sequences(&oracle, &vocab).unwrap()[0].actions,
            ActionId::seq(&[3, 1])
        );
        let predicted = TranscriptSource::Predicted {
            origin: "pred.jsonl".into(),
            streams: vec![("v".into(), frames(&[5, 5, 2]))],
        };
        let seqs = to_step_sequences(&predicted, &vocab).unwrap();
        assert_eq!(seqs[0].actions, ActionId::seq(&[5, 2]));
        assert_eq!(seqs[0].first_frames, Some(vec![0, 2]));
        let bad = TranscriptSource::Predicted {
            origin: "pred.jsonl".into(),
            streams: vec![("v".into(), frames(&[9]))],
        };
        assert!(matches!(
            to_step_sequences(&bad, &vocab),
            Err(IngestError::UnknownAction { .. })
        ));
    }

    #[test]
    fn oracle_matches_perfect_frame_predictions() {
        // frames expanded from the annotation spans reproduce the annotated sequence
        let steps: Vec<StepRecord> = [2u32, 0, 2, 1]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                StepRecord::correct(i, ActionId(*a)).with_frames(i as u64 * 5, i as u64 * 5 + 4)
            })
            .collect();
        let p = Procedure::new("v", "t", "a", steps).unwrap();
        let expanded: Vec<FramePrediction> = p
            .steps
            .iter()
            .flat_map(|s| {
                (s.start_frame.unwrap()..=s.end_frame.unwrap()).map(move |f| FramePrediction {
                    video_id: "v".into(),
                    frame: f,
                    action_id: s.action,
                    score: Some(1.0),
                })
            })
            .collect();
        let vocab = ActionVocabulary::build(&["a", "b", "c"]).unwrap();
        let oracle = to_step_sequences(
            &TranscriptSource::Oracle {
                origin: "a".into(),
                procedures: vec![p.clone()],
            },
            &vocab,
        )
        .unwrap();
        let predicted = to_step_sequences(
            &TranscriptSource::Predicted {
                origin: "b".into(),
                streams: vec![("v".into(), expanded)],
            },
            &vocab,
        )
        .unwrap();
        assert_eq!(oracle[0].actions, predicted[0].actions);
        assert_eq!(align_labels(&predicted[0], &p), Some(p.labels()));
    }

    #[test]
    fn span_alignment_defaults_to_correct() {
        let steps = vec![
            StepRecord::correct(0, ActionId(0)).with_frames(0, 9),
            StepRecord::mistake(1, ActionId(1), MistakeType::Order).with_frames(10, 19),
        ];
        let p = Procedure::new("v", "t", "a", steps).unwrap();
        assert_eq!(frame_labels(&[3, 12, 40], &p), vec![false, true, false]);
    }

    #[test]
    fn confidence_traces_sorted_by_frame() {
        let text = r#"{"video_id":"v","frame":2,"confidence":0.9}
{"video_id":"v","frame":1,"confidence":0.2}
{"video_id":"w","frame":0,"confidence":1.0}"#;
        let t = read_confidence(text.as_bytes()).unwrap();
        assert_eq!(t["v"], vec![0.2, 0.9]);
        assert!(
            read_confidence(r#"{"video_id":"v","frame":0,"confidence":1.5}"#.as_bytes()).is_err()
        );
    }

    /// Independent run-length scanner: keep element i iff it differs from i-1.
    fn groupwise_first(xs: &[u32]) -> Vec<ActionId> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < xs.len() {
            out.push(ActionId(xs[i]));
            let mut j = i;
            while j < xs.len() && xs[j] == xs[i] {
                j += 1;
            }
            i = j;
        }
        out
    }

    proptest! {
        #[test]
        fn dedup_matches_scanner(xs in proptest::collection::vec(0u32..3, 0..1000)) {
            let out = dedup_stream(&frames(&xs)).unwrap();
            prop_assert_eq!(&out, &groupwise_first(&xs));
            prop_assert!(out.windows(2).all(|w| w[0] != w[1]));
            prop_assert!(out.len() <= xs.len());
            let no_adjacent_dupes = xs.windows(2).all(|w| w[0] != w[1]);
            prop_assert_eq!(out.len() == xs.len(), no_adjacent_dupes);
        }

        #[test]
        fn dedup_is_idempotent(xs in proptest::collection::vec(0u32..4, 0..200)) {
            let once = dedup_stream(&frames(&xs)).unwrap();
            let raw: Vec<u32> = once.iter().map(|a| a.0).collect();
            prop_assert_eq!(dedup_stream(&frames(&raw)).unwrap(), once);
        }
    }
}
