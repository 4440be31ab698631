use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::types::{ActionId, Procedure};

/// Which training procedures serve as context for a test procedure.
///
/// Task ids may be hierarchical, `kind/name`. `SameTask` matches on the kind
/// (the whole id when there is no `/`), `SameTaskName` requires the full id
/// to match, and `AllTrain` uses every training procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextPolicy {
    #[default]
    SameTask,
    SameTaskName,
    AllTrain,
}

impl ContextPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextPolicy::SameTask => "same_task",
            ContextPolicy::SameTaskName => "same_task_name",
            ContextPolicy::AllTrain => "all_train",
        }
    }

    fn matches(self, candidate: &str, target: &str) -> bool {
        match self {
            ContextPolicy::AllTrain => true,
            ContextPolicy::SameTaskName => candidate == target,
            ContextPolicy::SameTask => task_kind(candidate) == task_kind(target),
        }
    }
}

impl fmt::Display for ContextPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same_task" => Ok(ContextPolicy::SameTask),
            "same_task_name" => Ok(ContextPolicy::SameTaskName),
            "all_train" => Ok(ContextPolicy::AllTrain),
            other => Err(format!("unknown context policy {other:?}")),
        }
    }
}

fn task_kind(task_id: &str) -> &str {
    task_id.split_once('/').map_or(task_id, |(kind, _)| kind)
}

/// Example sequences shown to the anticipator.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContextSet {
    pub sequences: Vec<(String, Vec<ActionId>)>,
    pub policy: ContextPolicy,
}

impl ContextSet {
    pub fn new(sequences: Vec<(String, Vec<ActionId>)>, policy: ContextPolicy) -> Self {
        ContextSet { sequences, policy }
    }

    /// Context for a procedure of task `task_id`, drawn from `train` only.
    /// Training order is preserved.
    pub fn select(train: &[Procedure], task_id: &str, policy: ContextPolicy) -> Self {
        let sequences = train
            .iter()
            .filter(|p| policy.matches(&p.toy_or_task_id, task_id))
            .map(|p| (p.procedure_id.clone(), p.actions()))
            .collect();
        ContextSet { sequences, policy }
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.iter().all(|(_, s)| s.is_empty())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proc(id: &str, task: &str) -> Procedure {
        Procedure::from_actions(id, task, &ActionId::seq(&[0, 1])).unwrap()
    }

    #[test]
    fn policies_select_expected_procedures() {
        let train = vec![
            proc("a", "excavator/blue"),
            proc("b", "excavator/red"),
            proc("c", "truck/red"),
            proc("d", "excavator/blue"),
        ];
        let ids = |c: ContextSet| {
            c.sequences
                .into_iter()
                .map(|(id, _)| id)
                .collect::<Vec<_>>()
        };
        assert_eq!(
            ids(ContextSet::select(
                &train,
                "excavator/blue",
                ContextPolicy::SameTask
            )),
            ["a", "b", "d"]
        );
        assert_eq!(
            ids(ContextSet::select(
                &train,
                "excavator/blue",
                ContextPolicy::SameTaskName
            )),
            ["a", "d"]
        );
        assert_eq!(
            ids(ContextSet::select(
                &train,
                "excavator/blue",
                ContextPolicy::AllTrain
            ))
            .len(),
            4
        );
    }

    #[test]
    fn flat_ids_match_exactly() {
        let train = vec![proc("a", "tent"), proc("b", "tent2")];
        let c = ContextSet::select(&train, "tent", ContextPolicy::SameTask);
        assert_eq!(c.len(), 1);
        assert!(ContextSet::select(&train, "boat", ContextPolicy::SameTask).is_empty());
    }
}
