use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use prego_core::benchmark::{
    split_by_confidence, split_occ, SplitPolicy, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_VAL_RATIO,
};
use prego_core::ingestion::{attach_confidence, parse_annotations, parse_confidence};

use crate::config::FileConfig;
use crate::failure::{CmdResult, Failure, OrFail};
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Correct procedures train; mistaken ones go to val or test
    Occ,
    /// Median self-reported confidence below the threshold goes to test
    Confidence,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Per-frame confidence JSONL, for the confidence policy
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Share of mistaken procedures sent to val by the occ policy
    #[arg(long)]
    pub val_ratio: Option<f64>,
    /// Manifest path; stdout when absent
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn cmd_split(args: SplitArgs) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref())?;
    let policy = match args.policy {
        Some(PolicyArg::Occ) => SplitPolicy::OccByMistake,
        Some(PolicyArg::Confidence) => SplitPolicy::Confidence,
        None => file.split.policy.unwrap_or(SplitPolicy::OccByMistake),
    };
    let annotations = args.annotations.or(file.paths.annotations).ok_or_else(|| {
        Failure::input("no annotation file given (--annotations or [paths].annotations)")
    })?;
    let mut procedures = parse_annotations(&annotations, None).input()?.procedures;
    let confidence = args.confidence.or(file.paths.confidence);
    let mut settings = json!({ "policy": policy, "annotations": annotations });
    let split = match policy {
        SplitPolicy::OccByMistake => {
            let ratio = args
                .val_ratio
                .or(file.split.val_ratio)
                .unwrap_or(DEFAULT_VAL_RATIO);
            settings["val_ratio"] = json!(ratio);
            split_occ(&procedures, ratio).input()?
        }
        SplitPolicy::Confidence => {
            let threshold = args
                .threshold
                .or(file.split.threshold)
                .unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD);
            match &confidence {
                Some(path) => {
                    attach_confidence(&mut procedures, &parse_confidence(path).input()?);
                    settings["confidence"] = json!(path);
                }
                None => log::warn!("no confidence file given, every procedure goes to test"),
            }
            split_by_confidence(&procedures, threshold).input()?
        }
    };
    for w in &split.warnings {
        eprintln!("warning: {w}");
    }
    let mut doc = serde_json::to_value(&split).input()?;
    doc.as_object_mut().expect("manifest is an object").insert(
        "header".into(),
        output::header("split", json!({ "config": settings })),
    );
    let mut out = output::create(args.out.as_deref())?;
    let write = |out: &mut Box<dyn std::io::Write>| -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    };
    write(&mut out).input()?;
    eprintln!(
        "train {} / val {} / test {}",
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(())
}
