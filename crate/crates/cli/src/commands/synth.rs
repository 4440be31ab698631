use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use prego_core::benchmark::{inject_mistake, sample_procedures, InjectError, SyntheticGrammar};
use prego_core::ingestion::annotation_records;
use prego_core::MistakeType;

use crate::failure::{CmdResult, Failure, OrFail};
use crate::output;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Grammar JSON: {"tasks":[{"task_id","steps":[names],"edges":[[i,j]]}]}
    #[arg(long)]
    pub grammar: PathBuf,
    /// Correct procedures to sample
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Additional procedures carrying one injected mistake each
    #[arg(long, default_value_t = 0)]
    pub inject: usize,
    /// Mistake kinds, used in rotation
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "wrong_action,repeat,order"
    )]
    pub kinds: Vec<MistakeType>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Annotation JSONL path; stdout when absent
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn cmd_synth(args: SynthArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.grammar).map_err(|e| {
        Failure::input(format!(
            "cannot read grammar {}: {e}",
            args.grammar.display()
        ))
    })?;
    let grammar = SyntheticGrammar::from_json(&text, args.seed).input()?;
    if args.inject > 0 && args.kinds.is_empty() {
        return Err(Failure::input("--inject needs at least one mistake kind"));
    }
    let mut rng = grammar.rng();
    let mut procedures = sample_procedures(&grammar, args.n, &mut rng, "");
    let bases = sample_procedures(&grammar, args.inject, &mut rng, "m-");
    for (j, base) in bases.iter().enumerate() {
        let mut last = None;
        let injected = (0..args.kinds.len()).find_map(|r| {
            let kind = args.kinds[(j + r) % args.kinds.len()];
            match inject_mistake(base, &grammar, kind, None, &mut rng) {
                Ok(p) => Some(p),
                Err(e) => {
                    last = Some(e);
                    None
                }
            }
        });
        match injected {
            Some(p) => procedures.push(p),
            None => {
                let e = last.unwrap_or(InjectError::UnknownTask(base.toy_or_task_id.clone()));
                return Err(Failure::input(format!(
                    "procedure {}: {e}",
                    base.procedure_id
                )));
            }
        }
    }
    let header = output::header(
        "synth",
        json!({
            "config": {
                "grammar": args.grammar,
                "n": args.n,
                "inject": args.inject,
                "kinds": args.kinds,
                "seed": args.seed,
            }
        }),
    );
    output::write_jsonl(
        args.out.as_deref(),
        &header,
        &annotation_records(&procedures, grammar.vocab()),
    )
}
