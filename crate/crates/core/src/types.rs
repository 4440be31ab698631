//! Action vocabulary, step records and procedures.
//!
//! A procedure is an ordered list of steps, each step one action drawn from
//! a fixed vocabulary. Action ids are dense: a vocabulary of `C` actions
//! uses exactly the ids `0..C`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an action inside an [`ActionVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u32);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Convenience for building id sequences from integer literals.
    pub fn seq(ids: &[u32]) -> Vec<ActionId> {
        ids.iter().copied().map(ActionId).collect()
    }
}

impl From<u32> for ActionId {
    fn from(v: u32) -> Self {
        ActionId(v)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("duplicate action name {0:?}")]
    DuplicateName(String),
    #[error("empty action name at position {0}")]
    EmptyName(usize),
    #[error("action name {0:?} contains a comma or newline")]
    InvalidName(String),
    #[error("vocabulary is empty")]
    Empty,
}

/// The set of possible actions, with ids assigned in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionVocabulary {
    names: Vec<String>,
    by_name: HashMap<String, ActionId>,
}

impl ActionVocabulary {
    /// Builds a vocabulary from action names. Names are trimmed; duplicates,
    /// empty names and names containing prompt separators are rejected.
    pub fn build<S: AsRef<str>>(names: &[S]) -> Result<Self, VocabularyError> {
        if names.is_empty() {
            return Err(VocabularyError::Empty);
        }
        let mut vocab = ActionVocabulary {
            names: Vec::with_capacity(names.len()),
            by_name: HashMap::with_capacity(names.len()),
        };
        for (pos, raw) in names.iter().enumerate() {
            let name = raw.as_ref().trim();
            if name.is_empty() {
                return Err(VocabularyError::EmptyName(pos));
            }
            if vocab.by_name.contains_key(name) {
                return Err(VocabularyError::DuplicateName(name.to_string()));
            }
            vocab.push(name)?;
        }
        Ok(vocab)
    }

    /// Returns the id for `name`, appending it if it is new.
    pub(crate) fn intern(&mut self, name: &str) -> Result<ActionId, VocabularyError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(VocabularyError::EmptyName(self.names.len()));
        }
        match self.by_name.get(name) {
            Some(id) => Ok(*id),
            None => self.push(name),
        }
    }

    pub(crate) fn empty() -> Self {
        ActionVocabulary {
            names: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    fn push(&mut self, name: &str) -> Result<ActionId, VocabularyError> {
        if name.contains(',') || name.contains('\n') || name.contains('\r') {
            return Err(VocabularyError::InvalidName(name.to_string()));
        }
        let id = ActionId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Number of actions, `C`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: ActionId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<ActionId> {
        self.by_name.get(name.trim()).copied()
    }

    pub fn contains(&self, id: ActionId) -> bool {
        id.index() < self.names.len()
    }

    /// `(id, name)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (ActionId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (ActionId(i as u32), n.as_str()))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Mistake categories. The first four are the procedural categories found in
/// annotated data; `WrongAction` only arises from synthetic injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MistakeType {
    Order,
    Omit,
    Repeat,
    Correction,
    WrongAction,
}

impl MistakeType {
    pub fn as_str(self) -> &'static str {
        match self {
            MistakeType::Order => "order",
            MistakeType::Omit => "omit",
            MistakeType::Repeat => "repeat",
            MistakeType::Correction => "correction",
            MistakeType::WrongAction => "wrong_action",
        }
    }
}

impl fmt::Display for MistakeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown mistake type {0:?}")]
pub struct UnknownMistakeType(pub String);

impl FromStr for MistakeType {
    type Err = UnknownMistakeType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "order" => Ok(MistakeType::Order),
            "omit" => Ok(MistakeType::Omit),
            "repeat" => Ok(MistakeType::Repeat),
            "correction" => Ok(MistakeType::Correction),
            "wrong_action" => Ok(MistakeType::WrongAction),
            other => Err(UnknownMistakeType(other.to_string())),
        }
    }
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: usize,
    pub action: ActionId,
    pub start_frame: Option<u64>,
    pub end_frame: Option<u64>,
    pub is_mistake: bool,
    pub mistake_type: Option<MistakeType>,
}

impl StepRecord {
    pub fn correct(step_index: usize, action: ActionId) -> Self {
        StepRecord {
            step_index,
            action,
            start_frame: None,
            end_frame: None,
            is_mistake: false,
            mistake_type: None,
        }
    }

    pub fn mistake(step_index: usize, action: ActionId, kind: MistakeType) -> Self {
        StepRecord {
            is_mistake: true,
            mistake_type: Some(kind),
            ..StepRecord::correct(step_index, action)
        }
    }

    pub fn with_frames(mut self, start: u64, end: u64) -> Self {
        self.start_frame = Some(start);
        self.end_frame = Some(end);
        self
    }

    /// True when `frame` falls inside this step's annotated span.
    pub fn contains_frame(&self, frame: u64) -> bool {
        match (self.start_frame, self.end_frame) {
            (Some(s), Some(e)) => s <= frame && frame <= e,
            _ => false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProcedureError {
    #[error("procedure {0:?} has no steps")]
    NoSteps(String),
    #[error("procedure {procedure:?}: expected step_index {expected}, found {found}")]
    NonContiguousSteps {
        procedure: String,
        expected: usize,
        found: usize,
    },
    #[error("procedure {procedure:?} step {step}: end_frame precedes start_frame")]
    InvertedSpan { procedure: String, step: usize },
    #[error("procedure {procedure:?} step {step}: mistake_type set on a correct step")]
    TypeOnCorrectStep { procedure: String, step: usize },
    #[error("procedure {procedure:?}: confidence value {value} outside [0, 1]")]
    ConfidenceOutOfRange { procedure: String, value: f64 },
}

/// An ordered sequence of steps performing one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Procedure {
    pub procedure_id: String,
    pub toy_or_task_id: String,
    pub actor_id: String,
    pub steps: Vec<StepRecord>,
    pub confidence: Option<Vec<f64>>,
}

impl Procedure {
    /// Validates step numbering, frame spans and mistake annotations.
    pub fn new(
        procedure_id: impl Into<String>,
        toy_or_task_id: impl Into<String>,
        actor_id: impl Into<String>,
        steps: Vec<StepRecord>,
    ) -> Result<Self, ProcedureError> {
        let p = Procedure {
            procedure_id: procedure_id.into(),
            toy_or_task_id: toy_or_task_id.into(),
            actor_id: actor_id.into(),
            steps,
            confidence: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Procedure whose steps are all correct, built from a bare action list.
    pub fn from_actions(
        procedure_id: impl Into<String>,
        toy_or_task_id: impl Into<String>,
        actions: &[ActionId],
    ) -> Result<Self, ProcedureError> {
        let steps = actions
            .iter()
            .enumerate()
            .map(|(i, a)| StepRecord::correct(i, *a))
            .collect();
        Procedure::new(procedure_id, toy_or_task_id, "", steps)
    }

    pub fn validate(&self) -> Result<(), ProcedureError> {
        if self.steps.is_empty() {
            return Err(ProcedureError::NoSteps(self.procedure_id.clone()));
        }
        for (expected, step) in self.steps.iter().enumerate() {
            if step.step_index != expected {
                return Err(ProcedureError::NonContiguousSteps {
                    procedure: self.procedure_id.clone(),
                    expected,
                    found: step.step_index,
                });
            }
            if let (Some(s), Some(e)) = (step.start_frame, step.end_frame) {
                if e < s {
                    return Err(ProcedureError::InvertedSpan {
                        procedure: self.procedure_id.clone(),
                        step: expected,
                    });
                }
            }
            if !step.is_mistake && step.mistake_type.is_some() {
                return Err(ProcedureError::TypeOnCorrectStep {
                    procedure: self.procedure_id.clone(),
                    step: expected,
                });
            }
        }
        if let Some(conf) = &self.confidence {
            if let Some(bad) = conf.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                return Err(ProcedureError::ConfidenceOutOfRange {
                    procedure: self.procedure_id.clone(),
                    value: *bad,
                });
            }
        }
        Ok(())
    }

    pub fn actions(&self) -> Vec<ActionId> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// Ground-truth mistake label per step.
    pub fn labels(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.is_mistake).collect()
    }

    pub fn has_mistake(&self) -> bool {
        self.steps.iter().any(|s| s.is_mistake)
    }

    pub fn first_mistake(&self) -> Option<usize> {
        self.steps.iter().position(|s| s.is_mistake)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
