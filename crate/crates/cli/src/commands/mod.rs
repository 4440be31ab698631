pub mod eval;
pub mod prompt;
pub mod run;
pub mod split;
pub mod synth;

use std::collections::HashSet;

use log::warn;

use prego_core::benchmark::{split_occ, BenchmarkSplit, DEFAULT_VAL_RATIO};
use prego_core::ingestion::{parse_annotations, Annotations};
use prego_core::Procedure;

use crate::config::{read_manifest, RunConfig};
use crate::failure::{CmdResult, Failure, OrFail};

/// Annotations with their split resolved.
pub struct Benchmark {
    pub annotations: Annotations,
    pub split: BenchmarkSplit,
    pub train: Vec<Procedure>,
}

impl Benchmark {
    pub fn load(cfg: &RunConfig) -> CmdResult<Self> {
        let annotations = parse_annotations(&cfg.annotations, None).input()?;
        let split = match &cfg.split {
            Some(p) => read_manifest(p)?,
            None => split_occ(&annotations.procedures, DEFAULT_VAL_RATIO).input()?,
        };
        let known: HashSet<&str> = annotations
            .procedures
            .iter()
            .map(|p| p.procedure_id.as_str())
            .collect();
        if let Some(missing) = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .find(|id| !known.contains(id.as_str()))
        {
            return Err(Failure::input(format!(
                "split lists procedure {missing:?} absent from the annotations"
            )));
        }
        let train: Vec<Procedure> = BenchmarkSplit::select(&split.train, &annotations.procedures)
            .into_iter()
            .cloned()
            .collect();
        if train.is_empty() {
            warn!("the training split is empty, anticipators get no context");
        }
        Ok(Benchmark {
            annotations,
            split,
            train,
        })
    }
}
