//! One-step memory baseline.
//!
//! A `C × C` count matrix records how often action `m` immediately follows
//! action `l` in training. A step is a mistake when its transition from the
//! previous step was never observed.

use super::{AnticipationError, AnticipationResult, Anticipator, ContextSet};
use crate::types::ActionId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    counts: Vec<u64>,
}

impl TransitionMatrix {
    pub fn zeros(size: usize) -> Self {
        TransitionMatrix {
            size,
            counts: vec![0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn check(&self, a: ActionId) -> Result<usize, AnticipationError> {
        if a.index() < self.size {
            Ok(a.index())
        } else {
            Err(AnticipationError::IdOutOfRange {
                action: a,
                size: self.size,
            })
        }
    }

    /// Number of times `to` followed `from` in training.
    pub fn count(&self, from: ActionId, to: ActionId) -> Result<u64, AnticipationError> {
        let (l, m) = (self.check(from)?, self.check(to)?);
        Ok(self.counts[l * self.size + m])
    }

    /// Sum of all entries, i.e. the number of adjacent pairs seen.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Recorded successors of `from`, most frequent first, ties by id.
    pub fn successors(&self, from: ActionId) -> Result<Vec<ActionId>, AnticipationError> {
        let l = self.check(from)?;
        let row = &self.counts[l * self.size..(l + 1) * self.size];
        let mut out: Vec<(u64, usize)> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(m, c)| (*c, m))
            .collect();
        out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(out.into_iter().map(|(_, m)| ActionId(m as u32)).collect())
    }
}

/// Counts adjacent pairs over the training sequences.
pub fn fit_transition_matrix(
    train: &[Vec<ActionId>],
    size: usize,
) -> Result<TransitionMatrix, AnticipationError> {
    let mut matrix = TransitionMatrix::zeros(size);
    for seq in train {
        for &a in seq {
            matrix.check(a)?;
        }
        for w in seq.windows(2) {
            matrix.counts[w[0].index() * size + w[1].index()] += 1;
        }
    }
    Ok(matrix)
}

/// Mistake flags under the one-step rule. The first step has no incoming
/// transition and is never flagged.
pub fn one_step_verdicts(
    matrix: &TransitionMatrix,
    sequence: &[ActionId],
) -> Result<Vec<bool>, AnticipationError> {
    if sequence.is_empty() {
        return Err(AnticipationError::EmptyHistory);
    }
    let mut out = Vec::with_capacity(sequence.len());
    matrix.check(sequence[0])?;
    out.push(false);
    for w in sequence.windows(2) {
        out.push(matrix.count(w[0], w[1])? == 0);
    }
    Ok(out)
}

/// The one-step baseline as an anticipator: every recorded successor of the
/// last observed step is an acceptable next step. The context argument is
/// ignored since the matrix already summarizes training.
#[derive(Debug, Clone)]
pub struct OneStepMemory {
    matrix: TransitionMatrix,
}

impl OneStepMemory {
    pub fn new(matrix: TransitionMatrix) -> Self {
        OneStepMemory { matrix }
    }

    pub fn fit(train: &[Vec<ActionId>], size: usize) -> Result<Self, AnticipationError> {
        fit_transition_matrix(train, size).map(Self::new)
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }
}

impl Anticipator for OneStepMemory {
    fn anticipate(
        &self,
        _context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        let last = history.last().ok_or(AnticipationError::EmptyHistory)?;
        Ok(AnticipationResult::of(self.matrix.successors(*last)?))
    }
}
