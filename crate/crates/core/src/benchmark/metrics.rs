//! Step-level precision, recall and F1, mistakes being the positive class.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{DetectionRun, StopPolicy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("procedure {procedure:?}: {reason}")]
    AlignmentMismatch { procedure: String, reason: String },
    #[error("no detection runs to evaluate")]
    NoRuns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pool every step of every procedure.
    #[default]
    Micro,
    /// Average per-procedure scores.
    Macro,
}

impl std::str::FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(format!("unknown averaging {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Counts {
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
}

impl Counts {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    fn scores(self) -> (f64, f64, f64) {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let f1 = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        (p, r, f1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub procedures: usize,
    /// Auxiliary: share of procedures whose first alarm falls exactly on the
    /// first annotated mistake (or which raise no alarm and have none).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_alarm_accuracy: Option<f64>,
}

impl MetricsReport {
    /// Micro-averaged report straight from confusion counts.
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let (precision, recall, f1) = Counts { tp, fp, tn, fn_ }.scores();
        MetricsReport {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1,
            averaging: Averaging::Micro,
            procedures: 0,
            first_alarm_accuracy: None,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Plain-text table: Precision, Recall, F1 as percentages, then counts.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>9} {:>9} {:>9}\n",
            "", "Precision", "Recall", "F1"
        ));
        out.push_str(&format!(
            "{:<10} {:>9.3} {:>9.3} {:>9.3}\n",
            "score", self.precision, self.recall, self.f1
        ));
        out.push_str(&format!(
            "{:<10} {:>9.1} {:>9.1} {:>9.1}\n",
            "percent",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        ));
        out.push_str(&format!(
            "tp={} fp={} tn={} fn={} ({:?}, {} procedures)\n",
            self.tp, self.fp, self.tn, self.fn_, self.averaging, self.procedures
        ));
        if let Some(acc) = self.first_alarm_accuracy {
            out.push_str(&format!("first-alarm accuracy (auxiliary): {acc:.3}\n"));
        }
        out
    }
}

/// Scores detection runs against per-step ground truth keyed by procedure.
///
/// Verdict `i` of a run must carry step index `i` and have a label. Runs
/// with the full-sequence policy that completed must cover every label;
/// stopped or aborted runs are scored on the steps they cover.
pub fn compute_metrics(
    runs: &[DetectionRun],
    ground_truth: &HashMap<String, Vec<bool>>,
    averaging: Averaging,
) -> Result<MetricsReport, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    let mismatch = |procedure: &str, reason: String| MetricsError::AlignmentMismatch {
        procedure: procedure.to_string(),
        reason,
    };
    let mut seen = HashSet::new();
    let mut total = Counts::default();
    let mut per_procedure: Vec<(&str, Counts)> = Vec::with_capacity(runs.len());
    let mut first_alarm_hits = 0usize;

    for run in runs {
        let id = run.procedure_id.as_str();
        if !seen.insert(id) {
            return Err(mismatch(id, "evaluated more than once".into()));
        }
        let labels = ground_truth
            .get(id)
            .ok_or_else(|| mismatch(id, "no ground truth".into()))?;
        if run.verdicts.len() > labels.len() {
            return Err(mismatch(
                id,
                format!(
                    "{} verdicts for {} labelled steps",
                    run.verdicts.len(),
                    labels.len()
                ),
            ));
        }
        if run.is_complete()
            && run.stop_policy == StopPolicy::FullSequence
            && run.verdicts.len() != labels.len()
        {
            return Err(mismatch(
                id,
                format!(
                    "{} verdicts for {} labelled steps",
                    run.verdicts.len(),
                    labels.len()
                ),
            ));
        }
        let mut counts = Counts::default();
        for (i, v) in run.verdicts.iter().enumerate() {
            if v.step_index != i {
                return Err(mismatch(
                    id,
                    format!("verdict {i} carries step_index {}", v.step_index),
                ));
            }
            counts.add(v.is_mistake, labels[i]);
        }
        let first_predicted = run.verdicts.iter().position(|v| v.is_mistake);
        let first_actual = labels.iter().position(|&l| l);
        if first_predicted == first_actual {
            first_alarm_hits += 1;
        }
        total.tp += counts.tp;
        total.fp += counts.fp;
        total.tn += counts.tn;
        total.fn_ += counts.fn_;
        per_procedure.push((id, counts));
    }

    let (precision, recall, f1) = match averaging {
        Averaging::Micro => total.scores(),
        Averaging::Macro => {
            // fixed summation order keeps the result independent of run order
            per_procedure.sort_by(|a, b| a.0.cmp(b.0));
            let n = per_procedure.len() as f64;
            let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
            for (_, c) in &per_procedure {
                let (cp, cr, cf) = c.scores();
                p += cp;
                r += cr;
                f += cf;
            }
            (p / n, r / n, f / n)
        }
    };
    Ok(MetricsReport {
        tp: total.tp,
        fp: total.fp,
        tn: total.tn,
        fn_: total.fn_,
        precision,
        recall,
        f1,
        averaging,
        procedures: runs.len(),
        first_alarm_accuracy: Some(first_alarm_hits as f64 / runs.len() as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{Cause, Verdict};
    use crate::types::ActionId;

    fn run(id: &str, flags: &[bool]) -> DetectionRun {
        DetectionRun {
            procedure_id: id.into(),
            verdicts: flags
                .iter()
                .enumerate()
                .map(|(i, &m)| Verdict {
                    step_index: i,
                    recognized: ActionId(0),
                    anticipated: vec![],
                    is_mistake: m,
                    cause: if m { Cause::Misalignment } else { Cause::None },
                })
                .collect(),
            first_mistake_index: flags.iter().position(|&m| m),
            stop_policy: StopPolicy::FullSequence,
            aborted: None,
        }
    }

    fn gt(entries: &[(&str, &[bool])]) -> HashMap<String, Vec<bool>> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_vec()))
            .collect()
    }

    #[test]
    fn formula_example() {
        let m = MetricsReport::from_counts(2, 1, 7, 0);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 0.8).abs() < 1e-12);
        assert!(m.table().contains("0.667"));
    }

    #[test]
    fn degenerate_denominators() {
        let m = MetricsReport::from_counts(0, 0, 5, 0);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perfect_detector() {
        let labels: &[bool] = &[false, false, true];
        let m = compute_metrics(
            &[run("a", labels), run("b", &[false, true])],
            &gt(&[("a", labels), ("b", &[false, true])]),
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.first_alarm_accuracy, Some(1.0));
        assert_eq!(m.total(), 5);
    }

    #[test]
    fn counts_from_runs() {
        let runs = [run("a", &[false, true, true]), run("b", &[false, false])];
        let m = compute_metrics(
            &runs,
            &gt(&[("a", &[false, false, true]), ("b", &[false, true])]),
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (1, 1, 2, 1));
        assert_eq!(m.first_alarm_accuracy, Some(0.0));
    }

    #[test]
    fn macro_averages_procedures() {
        let runs = [run("a", &[false, true]), run("b", &[true, false])];
        let truth = gt(&[("a", &[false, true]), ("b", &[false, true])]);
        let m = compute_metrics(&runs, &truth, Averaging::Macro).unwrap();
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
    }

    #[test]
    fn alignment_errors() {
        let truth = gt(&[("a", &[false, true])]);
        assert!(matches!(
            compute_metrics(&[run("zz", &[false])], &truth, Averaging::Micro),
            Err(MetricsError::AlignmentMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[run("a", &[false])], &truth, Averaging::Micro),
            Err(MetricsError::AlignmentMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[run("a", &[false, true, false])], &truth, Averaging::Micro),
            Err(MetricsError::AlignmentMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(
                &[run("a", &[false, true]), run("a", &[false, true])],
                &truth,
                Averaging::Micro
            ),
            Err(MetricsError::AlignmentMismatch { .. })
        ));
        assert_eq!(
            compute_metrics(&[], &truth, Averaging::Micro),
            Err(MetricsError::NoRuns)
        );
    }

    #[test]
    fn stopped_runs_score_their_prefix() {
        let mut r = run("a", &[false, true]);
        r.stop_policy = StopPolicy::StopAtFirst;
        let m = compute_metrics(
            &[r],
            &gt(&[("a", &[false, true, false, false])]),
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!(m.total(), 2);
    }

    #[test]
    fn permutation_invariant() {
        let runs = vec![
            run("a", &[false, true]),
            run("b", &[true, false, true]),
            run("c", &[false]),
        ];
        let truth = gt(&[
            ("a", &[false, true]),
            ("b", &[false, false, true]),
            ("c", &[false]),
        ]);
        for avg in [Averaging::Micro, Averaging::Macro] {
            let forward = compute_metrics(&runs, &truth, avg).unwrap();
            let mut rev = runs.clone();
            rev.reverse();
            assert_eq!(forward, compute_metrics(&rev, &truth, avg).unwrap());
        }
    }
}
