use clap::Args;

use prego_core::alphabet::SymbolAlphabet;
use prego_core::anticipation::{render_prompt, ContextSet, PromptSpec};
use prego_core::benchmark::trim_to_first_mistake;

use crate::commands::Benchmark;
use crate::config::{ModelArgs, RunConfig};
use crate::failure::{CmdResult, Failure, OrFail};

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Procedure whose history is rendered
    #[arg(long)]
    pub procedure: String,
    /// Step to anticipate; the history is every step before it. Defaults to the last step.
    #[arg(long)]
    pub step: Option<usize>,
}

pub fn cmd_prompt(args: PromptArgs) -> CmdResult {
    let cfg = RunConfig::resolve(&args.model, true)?;
    let bench = Benchmark::load(&cfg)?;
    let procedure = bench
        .annotations
        .get(&args.procedure)
        .map(trim_to_first_mistake)
        .ok_or_else(|| {
            Failure::input(format!(
                "procedure {:?} is not in the annotations",
                args.procedure
            ))
        })?;
    let step = args.step.unwrap_or(procedure.len().saturating_sub(1));
    if step == 0 || step >= procedure.len() {
        return Err(Failure::input(format!(
            "step must be between 1 and {} for procedure {:?}",
            procedure.len().saturating_sub(1),
            args.procedure
        )));
    }
    let alphabet =
        SymbolAlphabet::build(&bench.annotations.vocab, cfg.symbols, cfg.seed).input()?;
    let mut context = ContextSet::select(&bench.train, &procedure.toy_or_task_id, cfg.context);
    context
        .sequences
        .retain(|(id, _)| id != &procedure.procedure_id);
    let actions = procedure.actions();
    let spec = PromptSpec {
        style: cfg.style,
        alphabet: &alphabet,
        context: &context,
        history: &actions[..step],
    };
    print!("{}", render_prompt(&spec).input()?);
    Ok(())
}
