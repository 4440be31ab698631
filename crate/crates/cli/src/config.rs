//! Run configuration: a TOML file overridden by command-line flags.
//!
//! ```toml
//! backend = "pattern"       # one_step | pattern | llm
//! symbols = "numerical"     # numerical | semantic | random
//! seed = 0
//! style = "referenced_context"
//! context = "same_task"
//! k = 1
//! stop = "full_sequence"
//! jobs = 1
//!
//! [llm]
//! endpoint = "http://localhost:8080/complete"
//! profile = "llama"
//! budget = 200000
//!
//! [paths]
//! annotations = "annotations.jsonl"
//! split = "split.json"
//! ```
//!
//! Relative paths in the file are taken from the file's directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use prego_core::alphabet::SymbolMode;
use prego_core::anticipation::{ContextPolicy, Dialect, LlmConfig, LlmProfile, PromptStyle, MAX_K};
use prego_core::benchmark::SplitPolicy;
use prego_core::detection::StopPolicy;

use crate::failure::{CmdResult, Failure, OrFail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[value(name = "one_step")]
    OneStep,
    Pattern,
    Llm,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<Backend>,
    pub symbols: Option<SymbolMode>,
    pub seed: Option<u64>,
    pub style: Option<PromptStyle>,
    pub context: Option<ContextPolicy>,
    pub k: Option<usize>,
    pub stop: Option<StopPolicy>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: Option<String>,
    pub profile: Option<LlmProfile>,
    /// Switches to the OpenAI completions dialect with this model name.
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub budget: Option<u64>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub policy: Option<SplitPolicy>,
    pub threshold: Option<f64>,
    pub val_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub annotations: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub confidence: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Failure::input(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.paths.annotations,
            &mut cfg.paths.split,
            &mut cfg.paths.predictions,
            &mut cfg.paths.confidence,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Flags shared by `run` and `prompt`; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Annotation JSONL
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Split manifest; without one, an occ_by_mistake split is computed
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Per-frame predictions JSONL; recognized steps come from the annotations otherwise
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// numerical | semantic | random
    #[arg(long)]
    pub symbols: Option<SymbolMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// referenced_context | unreferenced_context | elaborate
    #[arg(long)]
    pub style: Option<PromptStyle>,
    /// same_task | same_task_name | all_train
    #[arg(long)]
    pub context: Option<ContextPolicy>,
    /// Number of anticipated actions per step
    #[arg(long)]
    pub k: Option<usize>,
    /// full_sequence | stop_at_first
    #[arg(long)]
    pub stop: Option<StopPolicy>,
    /// Procedures processed in parallel
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// llama | gpt
    #[arg(long)]
    pub profile: Option<LlmProfile>,
    /// Model name; selects the OpenAI completions request shape
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Estimated token budget for the whole run
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmSettings {
    pub endpoint: Option<String>,
    pub profile: LlmProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub budget: Option<u64>,
    pub max_retries: u32,
    pub timeout_secs: u64,
}

impl LlmSettings {
    pub fn client_config(&self, api_key: Option<String>) -> Option<LlmConfig> {
        let endpoint = self.endpoint.clone()?;
        let mut cfg = LlmConfig::new(endpoint, self.profile);
        cfg.temperature = self.temperature;
        cfg.max_tokens = self.max_tokens;
        cfg.max_retries = self.max_retries;
        cfg.timeout = Duration::from_secs(self.timeout_secs);
        cfg.api_key = api_key;
        if let Some(model) = &self.model {
            cfg.dialect = Dialect::OpenaiCompletions {
                model: model.clone(),
            };
        }
        Some(cfg)
    }
}

/// Fully resolved settings, echoed into output headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub backend: Backend,
    pub symbols: SymbolMode,
    pub seed: u64,
    pub style: PromptStyle,
    pub context: ContextPolicy,
    pub k: usize,
    pub stop: StopPolicy,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmSettings>,
    pub annotations: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
}

fn existing(path: Option<PathBuf>, what: &str) -> CmdResult<Option<PathBuf>> {
    match path {
        Some(p) if !p.exists() => Err(Failure::input(format!(
            "{what} file not found: {}",
            p.display()
        ))),
        other => Ok(other),
    }
}

impl RunConfig {
    /// Merges flags over the config file and validates the result. An LLM
    /// endpoint is required unless `dry_run` is set.
    pub fn resolve(args: &ModelArgs, dry_run: bool) -> CmdResult<Self> {
        let file = FileConfig::load(args.config.as_deref())?;
        let backend = args.backend.or(file.backend).unwrap_or(Backend::Pattern);
        let k = args.k.or(file.k).unwrap_or(1);
        if !(1..=MAX_K).contains(&k) {
            return Err(Failure::input(format!(
                "k must be between 1 and {MAX_K}, got {k}"
            )));
        }
        let jobs = args.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(Failure::input("jobs must be at least 1"));
        }
        let llm = (backend == Backend::Llm)
            .then(|| {
                let profile = args.profile.or(file.llm.profile).unwrap_or_default();
                let settings = LlmSettings {
                    endpoint: args.endpoint.clone().or(file.llm.endpoint),
                    profile,
                    model: args.model.clone().or(file.llm.model),
                    temperature: args
                        .temperature
                        .or(file.llm.temperature)
                        .unwrap_or(profile.temperature()),
                    max_tokens: args
                        .max_tokens
                        .or(file.llm.max_tokens)
                        .unwrap_or(profile.max_tokens()),
                    budget: args.budget.or(file.llm.budget),
                    max_retries: args.max_retries.or(file.llm.max_retries).unwrap_or(3),
                    timeout_secs: file.llm.timeout_secs.unwrap_or(60),
                };
                if settings.endpoint.is_none() && !dry_run {
                    return Err(Failure::input(
                        "the llm backend needs an endpoint (--endpoint or [llm].endpoint)",
                    ));
                }
                if !(0.0..=2.0).contains(&settings.temperature) {
                    return Err(Failure::input(format!(
                        "temperature {} is outside [0, 2]",
                        settings.temperature
                    )));
                }
                Ok(settings)
            })
            .transpose()?;
        let annotations = args
            .annotations
            .clone()
            .or(file.paths.annotations)
            .ok_or_else(|| {
                Failure::input("no annotation file given (--annotations or [paths].annotations)")
            })?;
        let annotations = existing(Some(annotations), "annotation")?.expect("checked above");
        Ok(RunConfig {
            backend,
            symbols: args
                .symbols
                .or(file.symbols)
                .unwrap_or(SymbolMode::Numerical),
            seed: args.seed.or(file.seed).unwrap_or(0),
            style: args.style.or(file.style).unwrap_or_default(),
            context: args.context.or(file.context).unwrap_or_default(),
            k,
            stop: args.stop.or(file.stop).unwrap_or_default(),
            jobs,
            llm,
            annotations,
            split: existing(args.split.clone().or(file.paths.split), "split manifest")?,
            predictions: existing(
                args.predictions.clone().or(file.paths.predictions),
                "prediction",
            )?,
        })
    }
}

pub fn read_manifest(path: &Path) -> CmdResult<prego_core::benchmark::BenchmarkSplit> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::input(format!(
            "cannot read split manifest {}: {e}",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("invalid split manifest {}: {e}", path.display()))
        .input()
}
