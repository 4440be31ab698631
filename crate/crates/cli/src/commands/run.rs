use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use prego_core::alphabet::SymbolAlphabet;
use prego_core::anticipation::{
    Anticipator, ContextSet, DryRunAnticipator, LlmAnticipator, LlmClient, OneStepMemory,
    PatternMachine, TokenBudget, API_KEY_ENV,
};
use prego_core::benchmark::{trim_to_first_mistake, BenchmarkSplit};
use prego_core::detection::{run_online, DetectionRun};
use prego_core::ingestion::{
    clip_to_procedure, group_predictions, parse_predictions, to_step_sequences, StepSequence,
    TranscriptSource,
};
use prego_core::Procedure;

use crate::commands::Benchmark;
use crate::config::{Backend, ModelArgs, RunConfig};
use crate::failure::{CmdResult, Failure, Kind, OrFail};
use crate::output::{self, Line};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum EvalSet {
    #[default]
    Test,
    Val,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Which held-out split to run on
    #[arg(long, value_enum, default_value_t = EvalSet::Test)]
    pub set: EvalSet,
    /// Print the prompts an llm backend would receive and send nothing
    #[arg(long)]
    pub dry_run: bool,
    /// Verdict JSONL path; stdout when absent
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// A held-out procedure with its recognized steps.
struct Case {
    procedure: Procedure,
    sequence: StepSequence,
}

fn cases(bench: &Benchmark, cfg: &RunConfig, set: EvalSet) -> CmdResult<Vec<Case>> {
    let ids = match set {
        EvalSet::Test => &bench.split.test,
        EvalSet::Val => &bench.split.val,
    };
    let held_out: Vec<Procedure> = BenchmarkSplit::select(ids, &bench.annotations.procedures)
        .into_iter()
        .map(trim_to_first_mistake)
        .collect();
    let vocab = &bench.annotations.vocab;
    let sequences = match &cfg.predictions {
        None => to_step_sequences(
            &TranscriptSource::Oracle {
                origin: cfg.annotations.clone(),
                procedures: held_out.clone(),
            },
            vocab,
        )
        .input()?,
        Some(path) => {
            let streams = group_predictions(parse_predictions(path).input()?).input()?;
            let clipped = held_out
                .iter()
                .map(|p| {
                    let (_, frames) = streams
                        .iter()
                        .find(|(video, _)| video == &p.procedure_id)
                        .ok_or_else(|| {
                            Failure::input(format!(
                                "no predictions for procedure {:?}",
                                p.procedure_id
                            ))
                        })?;
                    Ok((p.procedure_id.clone(), clip_to_procedure(frames, p)))
                })
                .collect::<CmdResult<Vec<_>>>()?;
            to_step_sequences(
                &TranscriptSource::Predicted {
                    origin: path.clone(),
                    streams: clipped,
                },
                vocab,
            )
            .input()?
        }
    };
    Ok(held_out
        .into_iter()
        .zip(sequences)
        .map(|(procedure, sequence)| Case {
            procedure,
            sequence,
        })
        .collect())
}

fn context_for(bench: &Benchmark, cfg: &RunConfig, p: &Procedure) -> ContextSet {
    let ctx = ContextSet::select(&bench.train, &p.toy_or_task_id, cfg.context);
    if ctx.is_empty() {
        warn!(
            "procedure {:?}: no training context for task {:?}",
            p.procedure_id, p.toy_or_task_id
        );
    }
    ctx
}

fn backend(
    bench: &Benchmark,
    cfg: &RunConfig,
    alphabet: &SymbolAlphabet,
) -> CmdResult<Box<dyn Anticipator>> {
    Ok(match cfg.backend {
        Backend::OneStep => {
            let train: Vec<_> = bench.train.iter().map(Procedure::actions).collect();
            Box::new(OneStepMemory::fit(&train, bench.annotations.vocab.len()).input()?)
        }
        Backend::Pattern => Box::new(PatternMachine::new(alphabet.clone(), cfg.k).input()?),
        Backend::Llm => {
            let settings = cfg.llm.as_ref().expect("llm settings resolved");
            let client_cfg = settings
                .client_config(std::env::var(API_KEY_ENV).ok())
                .ok_or_else(|| Failure::input("the llm backend needs an endpoint"))?;
            let client = LlmClient::new(client_cfg, Arc::new(TokenBudget::new(settings.budget)));
            Box::new(
                LlmAnticipator::new(Arc::new(client), alphabet.clone(), cfg.style, cfg.k)
                    .input()?,
            )
        }
    })
}

fn dry_run(
    bench: &Benchmark,
    cfg: &RunConfig,
    cases: &[Case],
    alphabet: &SymbolAlphabet,
) -> CmdResult {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut write = || -> std::io::Result<()> {
        for case in cases {
            let recorder = DryRunAnticipator::new(alphabet.clone(), cfg.style);
            let ctx = context_for(bench, cfg, &case.procedure);
            let run = run_online(
                &case.sequence.procedure_id,
                &case.sequence.actions,
                &recorder,
                &ctx,
                cfg.stop,
            );
            if let Some(a) = &run.aborted {
                warn!("procedure {:?}: {}", run.procedure_id, a.message);
            }
            for (i, prompt) in recorder.take_prompts().into_iter().enumerate() {
                writeln!(out, "### {} step {}", case.sequence.procedure_id, i + 1)?;
                out.write_all(prompt.as_bytes())?;
                writeln!(out)?;
            }
        }
        out.flush()
    };
    write().input()
}

pub fn cmd_run(args: RunArgs) -> CmdResult {
    let cfg = RunConfig::resolve(&args.model, args.dry_run)?;
    if args.dry_run && cfg.backend != Backend::Llm {
        return Err(Failure::input("--dry-run only applies to the llm backend"));
    }
    let bench = Benchmark::load(&cfg)?;
    let cases = cases(&bench, &cfg, args.set)?;
    let alphabet =
        SymbolAlphabet::build(&bench.annotations.vocab, cfg.symbols, cfg.seed).input()?;
    if args.dry_run {
        return dry_run(&bench, &cfg, &cases, &alphabet);
    }
    let backend = backend(&bench, &cfg, &alphabet)?;

    let detect = |case: &Case| -> (DetectionRun, Vec<Line>) {
        let ctx = context_for(&bench, &cfg, &case.procedure);
        let run = run_online(
            &case.sequence.procedure_id,
            &case.sequence.actions,
            &*backend,
            &ctx,
            cfg.stop,
        );
        let lines = output::run_lines(&run, case.sequence.first_frames.as_deref());
        (run, lines)
    };
    let results: Vec<(DetectionRun, Vec<Line>)> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .input()?;
        pool.install(|| cases.par_iter().map(detect).collect())
    } else {
        cases.iter().map(detect).collect()
    };
    let mut lines: Vec<Line> = results
        .iter()
        .flat_map(|(_, l)| l.iter().cloned())
        .collect();
    if cfg.jobs > 1 {
        lines.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    let source = if cfg.predictions.is_some() {
        "predicted"
    } else {
        "oracle"
    };
    let header = output::header(
        "run",
        json!({
            "config": cfg,
            "set": format!("{:?}", args.set).to_lowercase(),
            "source": source,
            "alphabet": alphabet.to_document(),
            "vocabulary": bench.annotations.vocab.names(),
        }),
    );
    output::write_jsonl(args.out.as_deref(), &header, &lines)?;

    let runs: Vec<&DetectionRun> = results.iter().map(|(r, _)| r).collect();
    let steps: usize = runs.iter().map(|r| r.verdicts.len()).sum();
    let flagged: usize = runs
        .iter()
        .map(|r| r.flags().iter().filter(|&&m| m).count())
        .sum();
    info!(
        "{} procedures, {steps} steps, {flagged} flagged",
        runs.len()
    );
    let aborted: Vec<_> = runs
        .iter()
        .filter_map(|r| r.aborted.as_ref().map(|a| (&r.procedure_id, a)))
        .collect();
    if let Some((id, first)) = aborted.first() {
        let kind = if aborted.iter().any(|(_, a)| a.remote) {
            Kind::Remote
        } else {
            Kind::Input
        };
        return Err(Failure::new(
            kind,
            anyhow::anyhow!(
                "{} of {} runs incomplete (first: procedure {id:?} at step {}: {}); partial verdicts were written",
                aborted.len(),
                runs.len(),
                first.step_index,
                first.message
            ),
        ));
    }
    Ok(())
}
