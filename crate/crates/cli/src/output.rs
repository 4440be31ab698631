//! Output files and the verdict JSONL format.
//!
//! Every artifact starts with a `{"header": {...}}` line (or key, for JSON
//! documents) naming the command and the configuration that produced it.
//! Verdict files then hold one line per step:
//!
//! ```text
//! {"procedure_id":"p1","step_index":1,"recognized":4,"anticipated":[4],"is_mistake":false,"cause":"none"}
//! ```
//!
//! A run cut short by a model failure ends with an incompleteness marker
//! `{"procedure_id":"p1","step_index":3,"incomplete":{"remote":true,"message":"..."}}`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use prego_core::detection::{Abort, Cause, DetectionRun, StopPolicy, Verdict};
use prego_core::ActionId;

use crate::failure::{CmdResult, Failure, OrFail};

pub fn header(command: &str, body: Value) -> Value {
    let mut h = json!({
        "tool": "prego",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    });
    if let (Some(h), Value::Object(extra)) = (h.as_object_mut(), body) {
        h.extend(extra);
    }
    h
}

pub fn create(path: Option<&Path>) -> CmdResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn write_jsonl<T: Serialize>(path: Option<&Path>, header: &Value, lines: &[T]) -> CmdResult {
    let mut out = create(path)?;
    let write = |out: &mut Box<dyn Write>| -> anyhow::Result<()> {
        serde_json::to_writer(&mut *out, &json!({ "header": header }))?;
        out.write_all(b"\n")?;
        for line in lines {
            serde_json::to_writer(&mut *out, line)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    };
    write(&mut out).input()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictLine {
    pub procedure_id: String,
    pub step_index: usize,
    pub recognized: ActionId,
    pub anticipated: Vec<ActionId>,
    pub is_mistake: bool,
    pub cause: Cause,
    /// First frame of the recognized segment, for predicted sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_frame: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incomplete {
    pub remote: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteLine {
    pub procedure_id: String,
    pub step_index: usize,
    pub incomplete: Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Line {
    Incomplete(IncompleteLine),
    Verdict(VerdictLine),
}

impl Line {
    pub fn key(&self) -> (&str, usize) {
        match self {
            Line::Incomplete(l) => (&l.procedure_id, l.step_index),
            Line::Verdict(l) => (&l.procedure_id, l.step_index),
        }
    }
}

/// Flattens a run into lines. `first_frames` come from predicted sources.
pub fn run_lines(run: &DetectionRun, first_frames: Option<&[u64]>) -> Vec<Line> {
    let mut lines: Vec<Line> = run
        .verdicts
        .iter()
        .map(|v| {
            Line::Verdict(VerdictLine {
                procedure_id: run.procedure_id.clone(),
                step_index: v.step_index,
                recognized: v.recognized,
                anticipated: v.anticipated.clone(),
                is_mistake: v.is_mistake,
                cause: v.cause,
                first_frame: first_frames.and_then(|f| f.get(v.step_index).copied()),
            })
        })
        .collect();
    if let Some(a) = &run.aborted {
        lines.push(Line::Incomplete(IncompleteLine {
            procedure_id: run.procedure_id.clone(),
            step_index: a.step_index,
            incomplete: Incomplete {
                remote: a.remote,
                message: a.message.clone(),
            },
        }));
    }
    lines
}

/// A verdict file read back into runs.
#[derive(Debug, Default)]
pub struct VerdictFile {
    pub header: Option<Value>,
    pub runs: Vec<DetectionRun>,
    /// Per procedure, the first frame of each step when the file carries them.
    pub first_frames: Vec<Option<Vec<u64>>>,
}

pub fn read_verdicts(path: &Path) -> CmdResult<VerdictFile> {
    let file = File::open(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let mut out = VerdictFile::default();
    let mut stop = StopPolicy::FullSequence;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |e: serde_json::Error| {
            Failure::input(format!("{} line {}: {e}", path.display(), i + 1))
        };
        let value: Value = serde_json::from_str(&line).map_err(bad)?;
        if let Some(h) = value.get("header") {
            if let Some(s) = h
                .pointer("/config/stop")
                .and_then(|s| serde_json::from_value(s.clone()).ok())
            {
                stop = s;
            }
            out.header = Some(h.clone());
            continue;
        }
        let parsed: Line = serde_json::from_value(value).map_err(bad)?;
        let id = parsed.key().0.to_string();
        let idx = match out.runs.iter().position(|r| r.procedure_id == id) {
            Some(idx) => idx,
            None => {
                out.runs.push(DetectionRun {
                    procedure_id: id,
                    verdicts: Vec::new(),
                    first_mistake_index: None,
                    stop_policy: stop,
                    aborted: None,
                });
                out.first_frames.push(Some(Vec::new()));
                out.runs.len() - 1
            }
        };
        let run = &mut out.runs[idx];
        match parsed {
            Line::Verdict(v) => {
                if v.is_mistake && run.first_mistake_index.is_none() {
                    run.first_mistake_index = Some(v.step_index);
                }
                match (&mut out.first_frames[idx], v.first_frame) {
                    (Some(frames), Some(f)) => frames.push(f),
                    (slot, _) => *slot = None,
                }
                run.verdicts.push(Verdict {
                    step_index: v.step_index,
                    recognized: v.recognized,
                    anticipated: v.anticipated,
                    is_mistake: v.is_mistake,
                    cause: v.cause,
                });
            }
            Line::Incomplete(l) => {
                run.aborted = Some(Abort {
                    step_index: l.step_index,
                    remote: l.incomplete.remote,
                    message: l.incomplete.message,
                });
            }
        }
    }
    for (run, frames) in out.runs.iter().zip(&mut out.first_frames) {
        if frames
            .as_ref()
            .is_some_and(|f| f.len() != run.verdicts.len() || f.is_empty())
        {
            *frames = None;
        }
    }
    Ok(out)
}
