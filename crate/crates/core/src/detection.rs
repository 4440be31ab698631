//! Online mistake detection.
//!
//! A step is correct when the recognized action is among the anticipated
//! ones, and a mistake otherwise. The runner walks a sequence causally: the
//! anticipator queried for step `τ` sees exactly the first `τ` recognized
//! steps. Step 0 has no history, so it is reported correct without a query.

use serde::{Deserialize, Serialize};

use crate::anticipation::{AnticipationError, AnticipationResult, Anticipator, ContextSet};
use crate::types::ActionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    None,
    Misalignment,
    /// The model answered with a symbol outside the alphabet.
    UnknownSymbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub step_index: usize,
    pub recognized: ActionId,
    pub anticipated: Vec<ActionId>,
    pub is_mistake: bool,
    pub cause: Cause,
}

/// Compares one recognized step with the anticipation for it.
pub fn detect_step(
    step_index: usize,
    recognized: ActionId,
    anticipated: &AnticipationResult,
) -> Verdict {
    let aligned = anticipated.predictions.contains(&recognized);
    let cause = if aligned {
        Cause::None
    } else if anticipated.predictions.is_empty() && anticipated.unknown_symbol.is_some() {
        Cause::UnknownSymbol
    } else {
        Cause::Misalignment
    };
    Verdict {
        step_index,
        recognized,
        anticipated: anticipated.predictions.clone(),
        is_mistake: !aligned,
        cause,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopPolicy {
    #[default]
    FullSequence,
    StopAtFirst,
}

impl std::str::FromStr for StopPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full_sequence" => Ok(StopPolicy::FullSequence),
            "stop_at_first" => Ok(StopPolicy::StopAtFirst),
            other => Err(format!("unknown stop policy {other:?}")),
        }
    }
}

/// Why a run ended before the sequence did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub step_index: usize,
    /// True for transport, protocol and budget failures of a remote model.
    pub remote: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub procedure_id: String,
    pub verdicts: Vec<Verdict>,
    pub first_mistake_index: Option<usize>,
    pub stop_policy: StopPolicy,
    /// Present when the anticipator failed; verdicts then cover only the
    /// steps before the failure.
    pub aborted: Option<Abort>,
}

impl DetectionRun {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.verdicts.iter().map(|v| v.is_mistake).collect()
    }
}

/// Runs detection over one recognized sequence.
pub fn run_online<A: Anticipator + ?Sized>(
    procedure_id: &str,
    sequence: &[ActionId],
    backend: &A,
    context: &ContextSet,
    stop_policy: StopPolicy,
) -> DetectionRun {
    let mut run = DetectionRun {
        procedure_id: procedure_id.to_string(),
        verdicts: Vec::with_capacity(sequence.len()),
        first_mistake_index: None,
        stop_policy,
        aborted: None,
    };
    for (tau, &recognized) in sequence.iter().enumerate() {
        let verdict = if tau == 0 {
            Verdict {
                step_index: 0,
                recognized,
                anticipated: Vec::new(),
                is_mistake: false,
                cause: Cause::None,
            }
        } else {
            match backend.anticipate(context, &sequence[..tau]) {
                Ok(a) => detect_step(tau, recognized, &a),
                Err(e) => {
                    run.aborted = Some(abort(tau, &e));
                    return run;
                }
            }
        };
        let mistake = verdict.is_mistake;
        run.verdicts.push(verdict);
        if mistake && run.first_mistake_index.is_none() {
            run.first_mistake_index = Some(tau);
            if stop_policy == StopPolicy::StopAtFirst {
                break;
            }
        }
    }
    run
}

fn abort(step_index: usize, e: &AnticipationError) -> Abort {
    Abort {
        step_index,
        remote: e.is_remote(),
        message: e.to_string(),
    }
}
