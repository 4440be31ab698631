//! Train/val/test partitions for one-class evaluation.
//!
//! `occ_by_mistake` puts every procedure without a mistake in train and
//! spreads the rest over val and test by a stable hash of the procedure id.
//! `confidence` sends procedures with a median self-reported confidence
//! below a threshold, or without confidence annotations, to test.

use std::collections::HashSet;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::Procedure;

pub const DEFAULT_VAL_RATIO: f64 = 0.5;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    OccByMistake,
    Confidence,
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("no procedure is free of mistakes, the training set would be empty")]
    NoCorrectProcedures,
    #[error("procedure id {0:?} appears more than once")]
    DuplicateProcedure(String),
    #[error("val ratio must be within [0, 1], got {0}")]
    InvalidRatio(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSplit {
    pub policy: SplitPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl BenchmarkSplit {
    /// True when the three lists are disjoint and together cover `ids`.
    pub fn is_partition_of<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> bool {
        let all: Vec<&str> = self
            .train
            .iter()
            .chain(&self.val)
            .chain(&self.test)
            .map(String::as_str)
            .collect();
        let set: HashSet<&str> = all.iter().copied().collect();
        let expected: HashSet<&str> = ids.into_iter().collect();
        set.len() == all.len() && set == expected
    }

    pub fn select<'a>(ids: &[String], procedures: &'a [Procedure]) -> Vec<&'a Procedure> {
        ids.iter()
            .filter_map(|id| procedures.iter().find(|p| &p.procedure_id == id))
            .collect()
    }
}

fn check_unique(procedures: &[Procedure]) -> Result<(), SplitError> {
    let mut seen = HashSet::new();
    for p in procedures {
        if !seen.insert(p.procedure_id.as_str()) {
            return Err(SplitError::DuplicateProcedure(p.procedure_id.clone()));
        }
    }
    Ok(())
}

/// Maps an id to `[0, 1)` through the first eight bytes of its SHA-256.
pub fn unit_hash(id: &str) -> f64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_be_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn split_occ(procedures: &[Procedure], val_ratio: f64) -> Result<BenchmarkSplit, SplitError> {
    if !(0.0..=1.0).contains(&val_ratio) {
        return Err(SplitError::InvalidRatio(val_ratio));
    }
    check_unique(procedures)?;
    let mut split = BenchmarkSplit {
        policy: SplitPolicy::OccByMistake,
        threshold: None,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        warnings: Vec::new(),
    };
    for p in procedures {
        let id = p.procedure_id.clone();
        if !p.has_mistake() {
            split.train.push(id);
        } else if unit_hash(&id) < val_ratio {
            split.val.push(id);
        } else {
            split.test.push(id);
        }
    }
    if split.train.is_empty() {
        return Err(SplitError::NoCorrectProcedures);
    }
    if split.test.is_empty() {
        let msg = "no procedure landed in the test split".to_string();
        warn!("{msg}");
        split.warnings.push(msg);
    }
    Ok(split)
}

/// Median with the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

pub fn split_by_confidence(
    procedures: &[Procedure],
    threshold: f64,
) -> Result<BenchmarkSplit, SplitError> {
    check_unique(procedures)?;
    let mut split = BenchmarkSplit {
        policy: SplitPolicy::Confidence,
        threshold: Some(threshold),
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        warnings: Vec::new(),
    };
    for p in procedures {
        let confident = p
            .confidence
            .as_deref()
            .and_then(median)
            .is_some_and(|m| m >= threshold);
        if confident {
            split.train.push(p.procedure_id.clone());
        } else {
            split.test.push(p.procedure_id.clone());
        }
    }
    if split.train.is_empty() {
        let msg = format!("no procedure reaches median confidence {threshold}");
        warn!("{msg}");
        split.warnings.push(msg);
    }
    Ok(split)
}
