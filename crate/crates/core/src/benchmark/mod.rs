//! Benchmark construction and scoring.

pub mod metrics;
pub mod split;
pub mod synth;

pub use metrics::{compute_metrics, Averaging, MetricsError, MetricsReport};
pub use split::{
    median, split_by_confidence, split_occ, unit_hash, BenchmarkSplit, SplitError, SplitPolicy,
    DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_VAL_RATIO,
};
pub use synth::{
    generate_procedures, inject_mistake, sample_procedures, GrammarError, GrammarFile, InjectError,
    SyntheticGrammar, TaskDag, TaskSpec,
};

use crate::types::Procedure;

/// Keeps the steps up to and including the first mistake. Procedures
/// without mistakes come back unchanged. The confidence trace, being
/// per-frame, is kept as is.
pub fn trim_to_first_mistake(procedure: &Procedure) -> Procedure {
    let mut out = procedure.clone();
    if let Some(i) = procedure.first_mistake() {
        out.steps.truncate(i + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ActionId, MistakeType, StepRecord};
    use proptest::prelude::*;

    fn procedure(flags: &[bool]) -> Procedure {
        let steps = flags
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                if m {
                    StepRecord::mistake(i, ActionId(i as u32), MistakeType::Order)
                } else {
                    StepRecord::correct(i, ActionId(i as u32))
                }
            })
            .collect();
        Procedure::new("p", "t", "a", steps).unwrap()
    }

    #[test]
    fn trim_examples() {
        assert_eq!(
            trim_to_first_mistake(&procedure(&[false, false, true, false, false])).len(),
            3
        );
        let ok = procedure(&[false, false, false]);
        assert_eq!(trim_to_first_mistake(&ok), ok);
        assert_eq!(trim_to_first_mistake(&procedure(&[true, false])).len(), 1);
    }

    proptest! {
        #[test]
        fn trimmed_has_at_most_one_trailing_mistake(flags in prop::collection::vec(any::<bool>(), 1..30)) {
            let t = trim_to_first_mistake(&procedure(&flags));
            let labels = t.labels();
            prop_assert!(labels.iter().filter(|&&m| m).count() <= 1);
            if let Some(i) = labels.iter().position(|&m| m) {
                prop_assert_eq!(i, labels.len() - 1);
            }
        }
    }
}
