use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use prego_core::benchmark::{compute_metrics, trim_to_first_mistake, Averaging};
use prego_core::ingestion::{frame_labels, parse_annotations};

use crate::failure::{CmdResult, Failure, Kind, OrFail};
use crate::output;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Verdict JSONL written by `prego run`
    #[arg(long)]
    pub verdicts: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// micro | macro
    #[arg(long, default_value = "micro")]
    pub averaging: Averaging,
    /// Write the JSON report here
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the table
    #[arg(long)]
    pub json: bool,
}

pub fn cmd_eval(args: EvalArgs) -> CmdResult {
    let file = output::read_verdicts(&args.verdicts)?;
    let annotations = parse_annotations(&args.annotations, None).input()?;
    if file.runs.is_empty() {
        return Err(Failure::new(
            Kind::Eval,
            anyhow::anyhow!("{} contains no verdicts", args.verdicts.display()),
        ));
    }
    let mut truth = HashMap::new();
    for (run, frames) in file.runs.iter().zip(&file.first_frames) {
        if let Some(p) = annotations.get(&run.procedure_id) {
            let trimmed = trim_to_first_mistake(p);
            let labels = match frames {
                Some(f) => frame_labels(f, &trimmed),
                None => trimmed.labels(),
            };
            truth.insert(run.procedure_id.clone(), labels);
        }
    }
    let incomplete = file.runs.iter().filter(|r| !r.is_complete()).count();
    if incomplete > 0 {
        eprintln!("warning: {incomplete} runs are incomplete and scored on the steps they cover");
    }
    let report = compute_metrics(&file.runs, &truth, args.averaging).eval()?;
    let mut doc = serde_json::to_value(&report).input()?;
    doc.as_object_mut().expect("report is an object").insert(
        "header".into(),
        output::header(
            "eval",
            json!({
                "config": {
                    "verdicts": args.verdicts,
                    "annotations": args.annotations,
                    "averaging": args.averaging,
                },
                "run": file.header,
            }),
        ),
    );
    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&doc).input()? + "\n";
        std::fs::write(path, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&doc).input()?);
    } else {
        print!("{}", report.table());
    }
    Ok(())
}
