//! Next-step anticipation.
//!
//! Given the recognized history `[a_1, …, a_{τ-1}]` and a context of correct
//! procedures, an [`Anticipator`] predicts the step expected at `τ`. Three
//! backends are provided:
//!
//! * [`OneStepMemory`]: the transition-matrix baseline; every successor
//!   recorded in training is an acceptable next step.
//! * [`PatternMachine`]: deterministic longest-suffix matching over the
//!   symbolic context. It stands in for sequence completion by a language
//!   model and is fully testable.
//! * [`LlmAnticipator`]: renders a prompt and asks a remote model to
//!   continue the symbolic sequence.

mod context;
mod llm;
mod pattern;
mod prompt;
mod transition;

pub use context::{ContextPolicy, ContextSet};
pub use llm::{
    estimate_tokens, llm_predict, parse_emission, Dialect, DryRunAnticipator, LlmAnticipator,
    LlmClient, LlmConfig, LlmProfile, TokenBudget, API_KEY_ENV,
};
pub use pattern::{pattern_machine_predict, PatternMachine};
pub use prompt::{render_prompt, PromptSpec, PromptStyle, PromptTemplate};
pub use transition::{fit_transition_matrix, one_step_verdicts, OneStepMemory, TransitionMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::AlphabetError;
use crate::types::ActionId;

/// Upper bound on the number of predictions a backend may return.
pub const MAX_K: usize = 5;
pub const DEFAULT_K: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum AnticipationError {
    #[error("action {action} outside vocabulary of size {size}")]
    IdOutOfRange { action: ActionId, size: usize },
    #[error("context contains no actions")]
    EmptyContext,
    #[error("history is empty")]
    EmptyHistory,
    #[error("k must be in 1..={MAX_K}, got {0}")]
    InvalidK(usize),
    #[error("action {0} has no symbol in the alphabet")]
    UnencodableAction(ActionId),
    #[error(transparent)]
    Alphabet(AlphabetError),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed model response: {0}")]
    Protocol(String),
    #[error("token budget exceeded: {used} used, {requested} requested, limit {limit}")]
    BudgetExceeded {
        used: u64,
        requested: u64,
        limit: u64,
    },
}

impl AnticipationError {
    /// Failures of the remote model service rather than of the inputs.
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            AnticipationError::Transport { .. }
                | AnticipationError::Protocol(_)
                | AnticipationError::BudgetExceeded { .. }
        )
    }
}

impl From<AlphabetError> for AnticipationError {
    fn from(e: AlphabetError) -> Self {
        match e {
            AlphabetError::UnknownAction(a) => AnticipationError::UnencodableAction(a),
            other => AnticipationError::Alphabet(other),
        }
    }
}

/// Predicted next steps, most likely first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnticipationResult {
    pub predictions: Vec<ActionId>,
    /// Raw model output, for language-model backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_emission: Option<String>,
    /// Set when the model emitted a symbol outside the alphabet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown_symbol: Option<String>,
}

impl AnticipationResult {
    pub fn of(predictions: Vec<ActionId>) -> Self {
        AnticipationResult {
            predictions,
            ..Default::default()
        }
    }
}

/// A next-step predictor. Implementations must be callable concurrently.
pub trait Anticipator: Send + Sync {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError>;
}

impl<T: Anticipator + ?Sized> Anticipator for &T {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        (**self).anticipate(context, history)
    }
}

impl<T: Anticipator + ?Sized> Anticipator for Box<T> {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        (**self).anticipate(context, history)
    }
}

pub(crate) fn check_k(k: usize) -> Result<(), AnticipationError> {
    if (1..=MAX_K).contains(&k) {
        Ok(())
    } else {
        Err(AnticipationError::InvalidK(k))
    }
}
