//! Deterministic longest-suffix pattern completion.
//!
//! The history and context are first encoded into symbols, so the machine
//! only sees sequence structure. It finds the longest suffix of the history
//! that occurs in some context sequence with at least one element after it,
//! and votes over the elements that follow those occurrences. Candidates are
//! ranked by vote count, then by first occurrence (context sequence order,
//! then position). When no suffix matches at all, the most frequent context
//! actions are returned with the same tie rule.
//!
//! Ranking by first occurrence rather than by id keeps predictions invariant
//! under any relabeling of actions.

use std::collections::HashMap;

use super::{check_k, AnticipationError, AnticipationResult, Anticipator, ContextSet};
use crate::alphabet::SymbolAlphabet;
use crate::types::ActionId;

type Position = (usize, usize);

struct Tally<'a> {
    order: Vec<&'a str>,
    votes: HashMap<&'a str, (usize, Position)>,
}

impl<'a> Tally<'a> {
    fn new() -> Self {
        Tally {
            order: Vec::new(),
            votes: HashMap::new(),
        }
    }

    fn add(&mut self, symbol: &'a str, at: Position) {
        let entry = self.votes.entry(symbol).or_insert_with(|| (0, at));
        if entry.0 == 0 {
            self.order.push(symbol);
        }
        entry.0 += 1;
    }

    fn top(mut self, k: usize) -> Vec<&'a str> {
        let votes = &self.votes;
        self.order.sort_by(|a, b| {
            let (ca, pa) = votes[a];
            let (cb, pb) = votes[b];
            cb.cmp(&ca).then(pa.cmp(&pb))
        });
        self.order.truncate(k);
        self.order
    }
}

fn common_suffix(a: &[&str], b: &[&str]) -> usize {
    a.iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count()
}

/// Predicts up to `k` next actions for `history` from `context`.
pub fn pattern_machine_predict(
    context: &ContextSet,
    history: &[ActionId],
    k: usize,
    alphabet: &SymbolAlphabet,
) -> Result<AnticipationResult, AnticipationError> {
    check_k(k)?;
    if history.is_empty() {
        return Err(AnticipationError::EmptyHistory);
    }
    if context.is_empty() {
        return Err(AnticipationError::EmptyContext);
    }
    let hist = alphabet.encode(history)?;
    let hist: Vec<&str> = hist.iter().map(String::as_str).collect();
    let encoded: Vec<Vec<String>> = context
        .sequences
        .iter()
        .map(|(_, s)| alphabet.encode(s))
        .collect::<Result<_, _>>()?;
    let ctx: Vec<Vec<&str>> = encoded
        .iter()
        .map(|s| s.iter().map(String::as_str).collect())
        .collect();

    let mut best = 0;
    let mut continuations: Vec<(&str, Position)> = Vec::new();
    for (si, seq) in ctx.iter().enumerate() {
        for j in 1..seq.len() {
            let len = common_suffix(&hist, &seq[..j]);
            if len == 0 || len < best {
                continue;
            }
            if len > best {
                best = len;
                continuations.clear();
            }
            continuations.push((seq[j], (si, j)));
        }
    }

    let mut tally = Tally::new();
    if best > 0 {
        for (sym, at) in continuations {
            tally.add(sym, at);
        }
    } else {
        for (si, seq) in ctx.iter().enumerate() {
            for (j, sym) in seq.iter().enumerate() {
                tally.add(sym, (si, j));
            }
        }
    }
    let predictions = alphabet.decode(&tally.top(k))?;
    Ok(AnticipationResult::of(predictions))
}

/// [`pattern_machine_predict`] as an [`Anticipator`].
#[derive(Debug, Clone)]
pub struct PatternMachine {
    alphabet: SymbolAlphabet,
    k: usize,
}

impl PatternMachine {
    pub fn new(alphabet: SymbolAlphabet, k: usize) -> Result<Self, AnticipationError> {
        check_k(k)?;
        Ok(PatternMachine { alphabet, k })
    }

    pub fn alphabet(&self) -> &SymbolAlphabet {
        &self.alphabet
    }
}

impl Anticipator for PatternMachine {
    fn anticipate(
        &self,
        context: &ContextSet,
        history: &[ActionId],
    ) -> Result<AnticipationResult, AnticipationError> {
        pattern_machine_predict(context, history, self.k, &self.alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::SymbolMode;
    use crate::anticipation::ContextPolicy;
    use crate::types::ActionVocabulary;
    use proptest::prelude::*;

    fn alphabet(n: usize, mode: SymbolMode) -> SymbolAlphabet {
        let names: Vec<String> = (0..n).map(|i| format!("act {i}")).collect();
        SymbolAlphabet::build(&ActionVocabulary::build(&names).unwrap(), mode, 3).unwrap()
    }

    fn ctx(raw: &[&[u32]]) -> ContextSet {
        ContextSet::new(
            raw.iter()
                .enumerate()
                .map(|(i, s)| (format!("c{i}"), ActionId::seq(s)))
                .collect(),
            ContextPolicy::SameTask,
        )
    }

    fn predict(c: &ContextSet, h: &[u32], k: usize) -> Vec<ActionId> {
        pattern_machine_predict(
            c,
            &ActionId::seq(h),
            k,
            &alphabet(10, SymbolMode::Numerical),
        )
        .unwrap()
        .predictions
    }

    /// Brute force: try every suffix length from longest to shortest and
    /// every window of the context.
    fn oracle(c: &[Vec<u32>], h: &[u32], k: usize) -> Vec<u32> {
        let mut found: Vec<(u32, (usize, usize))> = Vec::new();
        for len in (1..=h.len()).rev() {
            let suffix = &h[h.len() - len..];
            for (si, seq) in c.iter().enumerate() {
                for start in 0..seq.len() {
                    let end = start + len;
                    if end < seq.len() && &seq[start..end] == suffix {
                        found.push((seq[end], (si, end)));
                    }
                }
            }
            if !found.is_empty() {
                break;
            }
        }
        if found.is_empty() {
            for (si, seq) in c.iter().enumerate() {
                for (j, x) in seq.iter().enumerate() {
                    found.push((*x, (si, j)));
                }
            }
        }
        let mut ranked: Vec<(u32, usize, (usize, usize))> = Vec::new();
        for (x, at) in found {
            match ranked.iter_mut().find(|r| r.0 == x) {
                Some(r) => {
                    r.1 += 1;
                    r.2 = r.2.min(at);
                }
                None => ranked.push((x, 1, at)),
            }
        }
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.into_iter().take(k).map(|r| r.0).collect()
    }

    #[test]
    fn tie_goes_to_earlier_sequence() {
        let c = ctx(&[&[0, 1, 2], &[0, 1, 3]]);
        assert_eq!(predict(&c, &[0, 1], 1), ActionId::seq(&[2]));
        assert_eq!(predict(&c, &[0, 1], 2), ActionId::seq(&[2, 3]));
    }

    #[test]
    fn unique_continuation() {
        assert_eq!(predict(&ctx(&[&[4, 5]]), &[4], 1), ActionId::seq(&[5]));
    }

    #[test]
    fn frequency_fallback_without_match() {
        assert_eq!(predict(&ctx(&[&[0, 1]]), &[9], 1), ActionId::seq(&[0]));
        assert_eq!(
            predict(&ctx(&[&[3, 1, 1]]), &[9], 2),
            ActionId::seq(&[1, 3])
        );
    }

    #[test]
    fn longer_suffix_wins_over_majority() {
        // [2,0] matches only in the last sequence; shorter suffix [0] would vote for 1
        let c = ctx(&[&[0, 1], &[0, 1], &[2, 0, 5]]);
        assert_eq!(predict(&c, &[2, 0], 1), ActionId::seq(&[5]));
        assert_eq!(predict(&c, &[0], 1), ActionId::seq(&[1]));
    }

    #[test]
    fn errors() {
        let a = alphabet(4, SymbolMode::Numerical);
        assert_eq!(
            pattern_machine_predict(&ctx(&[]), &ActionId::seq(&[0]), 1, &a),
            Err(AnticipationError::EmptyContext)
        );
        assert_eq!(
            pattern_machine_predict(&ctx(&[&[0, 1]]), &[], 1, &a),
            Err(AnticipationError::EmptyHistory)
        );
        assert_eq!(
            pattern_machine_predict(&ctx(&[&[0, 1]]), &ActionId::seq(&[0]), 6, &a),
            Err(AnticipationError::InvalidK(6))
        );
        assert_eq!(
            pattern_machine_predict(&ctx(&[&[0, 1]]), &ActionId::seq(&[7]), 1, &a),
            Err(AnticipationError::UnencodableAction(ActionId(7)))
        );
    }

    #[test]
    fn prefix_of_unique_sequence_predicts_its_next_element() {
        let seq = [3u32, 1, 4, 0, 5, 9, 2, 6];
        let c = ctx(&[&seq, &[7, 8, 7]]);
        for t in 1..seq.len() {
            assert_eq!(predict(&c, &seq[..t], 1), ActionId::seq(&[seq[t]]));
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            c in proptest::collection::vec(proptest::collection::vec(0u32..6, 1..10), 1..6),
            h in proptest::collection::vec(0u32..6, 1..8),
            k in 1usize..=5,
            mode_ix in 0usize..3,
        ) {
            let raw: Vec<&[u32]> = c.iter().map(Vec::as_slice).collect();
            let got = pattern_machine_predict(&ctx(&raw), &ActionId::seq(&h), k, &alphabet(6, SymbolMode::ALL[mode_ix])).unwrap();
            prop_assert_eq!(got.predictions, ActionId::seq(&oracle(&c, &h, k)));
        }
    }
}
