//! Remote language-model anticipation.
//!
//! The client speaks one wire shape: `POST {"prompt", "temperature",
//! "max_tokens"}` answered by `{"text"}`. [`Dialect`] adapts that shape to
//! hosted completion APIs. Transport failures (connection errors, 429 and
//! 5xx responses) are retried with exponential backoff up to a fixed number
//! of attempts. A shared [`TokenBudget`] caps the estimated token spend.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    check_k, render_prompt, AnticipationError, AnticipationResult, Anticipator, ContextSet,
    PromptSpec, PromptStyle,
};
use crate::alphabet::SymbolAlphabet;
use crate::types::ActionId;

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "PREGO_LLM_KEY";

/// Sampling defaults for the two model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmProfile {
    /// Open-weights chat model: temperature 0.6, 4 output tokens.
    #[default]
    Llama,
    /// Hosted completion model: temperature 0.0, output length left loose.
    Gpt,
}

impl LlmProfile {
    pub fn temperature(self) -> f64 {
        match self {
            LlmProfile::Llama => 0.6,
            LlmProfile::Gpt => 0.0,
        }
    }

    pub fn max_tokens(self) -> u32 {
        match self {
            LlmProfile::Llama => 4,
            LlmProfile::Gpt => 64,
        }
    }
}

impl std::str::FromStr for LlmProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llama" => Ok(LlmProfile::Llama),
            "gpt" => Ok(LlmProfile::Gpt),
            other => Err(format!("unknown model profile {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dialect {
    /// `{"prompt","temperature","max_tokens"}` → `{"text"}`
    #[default]
    Plain,
    /// OpenAI-style completions: adds `model`, reads `choices[0].text`.
    OpenaiCompletions { model: String },
}

impl Dialect {
    fn body(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Value {
        match self {
            Dialect::Plain => json!({
                "prompt": prompt,
                "temperature": temperature,
                "max_tokens": max_tokens,
            }),
            Dialect::OpenaiCompletions { model } => json!({
                "model": model,
                "prompt": prompt,
                "temperature": temperature,
                "max_tokens": max_tokens,
            }),
        }
    }

    fn text(&self, response: &Value) -> Option<String> {
        let v = match self {
            Dialect::Plain => response.get("text"),
            Dialect::OpenaiCompletions { .. } => response.pointer("/choices/0/text"),
        };
        v.and_then(Value::as_str).map(str::to_owned)
    }
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub endpoint: String,
    pub dialect: Dialect,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
    pub api_key: Option<String>,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, profile: LlmProfile) -> Self {
        LlmConfig {
            endpoint: endpoint.into(),
            dialect: Dialect::Plain,
            temperature: profile.temperature(),
            max_tokens: profile.max_tokens(),
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            timeout: Duration::from_secs(60),
            api_key: None,
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
            .min(self.max_backoff)
    }
}

/// Rough token estimate for a request: a quarter token per prompt byte,
/// rounded up, plus the full output allowance.
pub fn estimate_tokens(prompt: &str, max_tokens: u32) -> u64 {
    (prompt.len() as u64).div_ceil(4) + u64::from(max_tokens)
}

/// Shared token counter; `limit = None` means unlimited.
#[derive(Debug, Default)]
pub struct TokenBudget {
    limit: Option<u64>,
    used: AtomicU64,
}

impl TokenBudget {
    pub fn new(limit: Option<u64>) -> Self {
        TokenBudget {
            limit,
            used: AtomicU64::new(0),
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    /// Charges `tokens`, or fails without charging if that would pass the limit.
    pub fn reserve(&self, tokens: u64) -> Result<(), AnticipationError> {
        let limit = self.limit;
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| match limit {
                Some(l) if used + tokens > l => None,
                _ => Some(used + tokens),
            })
            .map(|_| ())
            .map_err(|used| AnticipationError::BudgetExceeded {
                used,
                requested: tokens,
                limit: limit.unwrap_or(u64::MAX),
            })
    }
}

pub struct LlmClient {
    config: LlmConfig,
    agent: ureq::Agent,
    budget: Arc<TokenBudget>,
}

impl LlmClient {
    pub fn new(config: LlmConfig, budget: Arc<TokenBudget>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        LlmClient {
            config,
            agent,
            budget,
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn budget(&self) -> &TokenBudget {
        &self.budget
    }

    /// Sends one completion request and returns the emitted text.
    pub fn complete(&self, prompt: &str) -> Result<String, AnticipationError> {
        let cfg = &self.config;
        self.budget
            .reserve(estimate_tokens(prompt, cfg.max_tokens))?;
        let body = cfg.dialect.body(prompt, cfg.temperature, cfg.max_tokens);
        let mut last_error = String::new();
        for attempt in 0..=cfg.max_retries {
            if attempt > 0 {
                let wait = cfg.backoff(attempt - 1);
                warn!("llm request failed ({last_error}), retry {attempt} in {wait:?}");
                thread::sleep(wait);
            }
            let mut request = self.agent.post(&cfg.endpoint);
            if let Some(key) = &cfg.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            match request.send_json(&body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        let value: Value = response
                            .body_mut()
                            .read_json()
                            .map_err(|e| AnticipationError::Protocol(e.to_string()))?;
                        debug!("llm response: {value}");
                        return cfg.dialect.text(&value).ok_or_else(|| {
                            AnticipationError::Protocol(format!("no completion text in {value}"))
                        });
                    }
                    last_error = format!("HTTP {status}");
                    if status != 429 && status < 500 {
                        return Err(AnticipationError::Transport {
                            attempts: attempt + 1,
                            message: last_error,
                        });
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(AnticipationError::Transport {
            attempts: cfg.max_retries + 1,
            message: last_error,
        })
    }
}

/// Reads predictions from a model emission.
///
/// Only the first line counts. It is split on commas, each piece trimmed,
/// and the first `k` non-empty pieces are decoded. Pieces outside the
/// alphabet are dropped; if nothing decodes, the first piece is recorded as
/// an unknown symbol and no prediction is made.
pub fn parse_emission(text: &str, alphabet: &SymbolAlphabet, k: usize) -> AnticipationResult {
    let line = text.trim_start().lines().next().unwrap_or("");
    let pieces: Vec<&str> = line
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .take(k)
        .collect();
    let mut predictions: Vec<ActionId> = Vec::new();
    for p in &pieces {
        if let Ok(a) = alphabet.action(p) {
            if !predictions.contains(&a) {
                predictions.push(a);
            }
        }
    }
    let unknown_symbol = if predictions.is_empty() {
        Some(pieces.first().copied().unwrap_or("").to_string())
    } else {
        None
    };
    AnticipationResult {
        predictions,
        raw_emission: Some(text.to_string()),
        unknown_symbol,
    }
}

/// Renders `spec`, queries the model and decodes its answer.
pub fn llm_predict(
    client: &LlmClient,
    spec: &PromptSpec<'_>,
    k: usize,
) -> Result<AnticipationResult, AnticipationError> {
    check_k(k)?;
    let prompt = render_prompt(spec)?;
    let emission = client.complete(&prompt)?;
    Ok(parse_emission(&emission, spec.alphabet, k))
}

pub struct LlmAnticipator {
    client: Arc<LlmClient>,
    alphabet: SymbolAlphabet,
    style: PromptStyle,
    k: usize,
}

impl LlmAnticipator {
    pub fn new(
        client: Arc<LlmClient>,
        alphabet: SymbolAlphabet,
        style: PromptStyle,
        k: usize,
    ) -> Result<Self, AnticipationError> {
        check_k(k)?;
        Ok(LlmAnticipator {
            client,
            alphabet,
            style,
            k,
        })
    }
}

impl Anticipator for LlmAnticipator {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        let spec = PromptSpec {
            style: self.style,
            alphabet: &self.alphabet,
            context,
            history,
        };
        llm_predict(&self.client, &spec, self.k)
    }
}

/// Renders and records every prompt without contacting a model. Returns no
/// predictions.
pub struct DryRunAnticipator {
    alphabet: SymbolAlphabet,
    style: PromptStyle,
    prompts: Mutex<Vec<String>>,
}

impl DryRunAnticipator {
    pub fn new(alphabet: SymbolAlphabet, style: PromptStyle) -> Self {
        DryRunAnticipator {
            alphabet,
            style,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn take_prompts(&self) -> Vec<String> {
        std::mem::take(&mut *self.prompts.lock().expect("prompt log poisoned"))
    }
}

impl Anticipator for DryRunAnticipator {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        let prompt = render_prompt(&PromptSpec {
            style: self.style,
            alphabet: &self.alphabet,
            context,
            history,
        })?;
        self.prompts
            .lock()
            .expect("prompt log poisoned")
            .push(prompt);
        Ok(AnticipationResult::default())
    }
}
