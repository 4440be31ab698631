//! Invertible mapping from actions to prompt symbols.
//!
//! Three symbol modes are supported:
//!
//! * `numerical`: the decimal action id, unpadded.
//! * `semantic`: the action name itself, spaces preserved.
//! * `random`: tokens drawn without replacement from a fixed pool of
//!   [`RANDOM_POOL_SIZE`] ASCII tokens (`#S000` … `#S1FF`), shuffled by seed.
//!
//! Every alphabet is a bijection between the vocabulary's ids and its
//! symbols, so `decode(encode(s)) == s` for any sequence over the vocabulary.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ActionId, ActionVocabulary};

pub const RANDOM_POOL_SIZE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolMode {
    Numerical,
    Semantic,
    Random,
}

impl SymbolMode {
    pub const ALL: [SymbolMode; 3] = [
        SymbolMode::Numerical,
        SymbolMode::Semantic,
        SymbolMode::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SymbolMode::Numerical => "numerical",
            SymbolMode::Semantic => "semantic",
            SymbolMode::Random => "random",
        }
    }
}

impl fmt::Display for SymbolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SymbolMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "numerical" => Ok(SymbolMode::Numerical),
            "semantic" => Ok(SymbolMode::Semantic),
            "random" => Ok(SymbolMode::Random),
            other => Err(format!("unknown symbol mode {other:?}")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("random symbol pool holds {pool} tokens but the vocabulary has {needed} actions")]
    PoolExhausted { needed: usize, pool: usize },
    #[error("action {0} is not in the alphabet")]
    UnknownAction(ActionId),
    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(String),
    #[error("invalid alphabet document: {0}")]
    InvalidDocument(String),
}

/// The fixed, ordered random-symbol pool.
pub fn random_pool() -> Vec<String> {
    (0..RANDOM_POOL_SIZE)
        .map(|i| format!("#S{i:03X}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolAlphabet {
    mode: SymbolMode,
    seed: u64,
    forward: Vec<String>,
    backward: HashMap<String, ActionId>,
}

impl SymbolAlphabet {
    /// Builds the alphabet for `vocab`. `seed` only matters in random mode;
    /// the result is a pure function of `(vocab, mode, seed)`.
    pub fn build(
        vocab: &ActionVocabulary,
        mode: SymbolMode,
        seed: u64,
    ) -> Result<Self, AlphabetError> {
        let forward: Vec<String> = match mode {
            SymbolMode::Numerical => (0..vocab.len()).map(|i| i.to_string()).collect(),
            SymbolMode::Semantic => vocab.names().to_vec(),
            SymbolMode::Random => {
                if vocab.len() > RANDOM_POOL_SIZE {
                    return Err(AlphabetError::PoolExhausted {
                        needed: vocab.len(),
                        pool: RANDOM_POOL_SIZE,
                    });
                }
                let mut pool = random_pool();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                pool.shuffle(&mut rng);
                pool.truncate(vocab.len());
                pool
            }
        };
        Self::from_forward(mode, seed, forward)
    }

    fn from_forward(
        mode: SymbolMode,
        seed: u64,
        forward: Vec<String>,
    ) -> Result<Self, AlphabetError> {
        let mut backward = HashMap::with_capacity(forward.len());
        for (i, sym) in forward.iter().enumerate() {
            if sym.is_empty() || sym.contains(',') || sym.contains('\n') || sym.contains('\r') {
                return Err(AlphabetError::InvalidDocument(format!(
                    "illegal symbol {sym:?}"
                )));
            }
            if backward.insert(sym.clone(), ActionId(i as u32)).is_some() {
                return Err(AlphabetError::InvalidDocument(format!(
                    "duplicate symbol {sym:?}"
                )));
            }
        }
        Ok(SymbolAlphabet {
            mode,
            seed,
            forward,
            backward,
        })
    }

    pub fn mode(&self) -> SymbolMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn symbol(&self, id: ActionId) -> Result<&str, AlphabetError> {
        self.forward
            .get(id.index())
            .map(String::as_str)
            .ok_or(AlphabetError::UnknownAction(id))
    }

    pub fn action(&self, symbol: &str) -> Result<ActionId, AlphabetError> {
        self.backward
            .get(symbol)
            .copied()
            .ok_or_else(|| AlphabetError::UnknownSymbol(symbol.to_string()))
    }

    pub fn encode(&self, sequence: &[ActionId]) -> Result<Vec<String>, AlphabetError> {
        sequence
            .iter()
            .map(|&a| self.symbol(a).map(str::to_owned))
            .collect()
    }

    pub fn decode<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Vec<ActionId>, AlphabetError> {
        symbols.iter().map(|s| self.action(s.as_ref())).collect()
    }

    pub fn to_document(&self) -> AlphabetDocument {
        AlphabetDocument {
            mode: self.mode,
            seed: self.seed,
            forward: self
                .forward
                .iter()
                .enumerate()
                .map(|(i, s)| (i as u32, s.clone()))
                .collect(),
        }
    }

    pub fn from_document(doc: AlphabetDocument) -> Result<Self, AlphabetError> {
        let n = doc.forward.len();
        let mut forward = Vec::with_capacity(n);
        for (expected, (id, sym)) in doc.forward.into_iter().enumerate() {
            if id as usize != expected {
                return Err(AlphabetError::InvalidDocument(format!(
                    "ids must cover 0..{n}, missing {expected}"
                )));
            }
            forward.push(sym);
        }
        Self::from_forward(doc.mode, doc.seed, forward)
    }
}

/// Serialized form, `{"mode", "seed", "forward": {"<id>": "<symbol>"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetDocument {
    pub mode: SymbolMode,
    pub seed: u64,
    pub forward: BTreeMap<u32, String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab(n: usize) -> ActionVocabulary {
        let names: Vec<String> = (0..n).map(|i| format!("step {i}")).collect();
        ActionVocabulary::build(&names).unwrap()
    }

    #[test]
    fn numerical_is_decimal_id() {
        let a = SymbolAlphabet::build(&vocab(3), SymbolMode::Numerical, 0).unwrap();
        assert_eq!(
            a.encode(&ActionId::seq(&[0, 1, 2])).unwrap(),
            ["0", "1", "2"]
        );
        assert_eq!(
            a.encode(&ActionId::seq(&[2, 0, 1])).unwrap(),
            ["2", "0", "1"]
        );
    }

    #[test]
    fn semantic_passes_names_through() {
        let v = ActionVocabulary::build(&["attach wheel"]).unwrap();
        let a = SymbolAlphabet::build(&v, SymbolMode::Semantic, 0).unwrap();
        assert_eq!(a.symbol(ActionId(0)).unwrap(), "attach wheel");
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let v = vocab(5);
        let a = SymbolAlphabet::build(&v, SymbolMode::Random, 7).unwrap();
        let b = SymbolAlphabet::build(&v, SymbolMode::Random, 7).unwrap();
        assert_eq!(a, b);
        let c = SymbolAlphabet::build(&v, SymbolMode::Random, 8).unwrap();
        assert_ne!(
            a.encode(&ActionId::seq(&[0, 1, 2, 3, 4])),
            c.encode(&ActionId::seq(&[0, 1, 2, 3, 4]))
        );
    }

    #[test]
    fn random_pool_exhaustion() {
        assert!(SymbolAlphabet::build(&vocab(RANDOM_POOL_SIZE), SymbolMode::Random, 1).is_ok());
        assert_eq!(
            SymbolAlphabet::build(&vocab(RANDOM_POOL_SIZE + 1), SymbolMode::Random, 1),
            Err(AlphabetError::PoolExhausted {
                needed: RANDOM_POOL_SIZE + 1,
                pool: RANDOM_POOL_SIZE
            })
        );
    }

    #[test]
    fn pool_tokens_are_distinct_and_safe() {
        let pool = random_pool();
        let set: std::collections::HashSet<_> = pool.iter().collect();
        assert_eq!(set.len(), RANDOM_POOL_SIZE);
        assert_eq!(pool[0], "#S000");
        assert_eq!(pool[511], "#S1FF");
    }

    #[test]
    fn unknown_symbol_and_action() {
        let a = SymbolAlphabet::build(&vocab(3), SymbolMode::Numerical, 0).unwrap();
        assert_eq!(
            a.decode(&["nonexistent"]),
            Err(AlphabetError::UnknownSymbol("nonexistent".into()))
        );
        assert_eq!(
            a.encode(&[ActionId(3)]),
            Err(AlphabetError::UnknownAction(ActionId(3)))
        );
    }

    #[test]
    fn document_round_trip() {
        let a = SymbolAlphabet::build(&vocab(12), SymbolMode::Random, 99).unwrap();
        let json = serde_json::to_string(&a.to_document()).unwrap();
        assert!(json.starts_with(r##"{"mode":"random","seed":99,"forward":{"0":"#S"##));
        let back = SymbolAlphabet::from_document(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn document_with_gap_rejected() {
        let doc: AlphabetDocument =
            serde_json::from_str(r#"{"mode":"numerical","seed":0,"forward":{"0":"0","2":"2"}}"#)
                .unwrap();
        assert!(matches!(
            SymbolAlphabet::from_document(doc),
            Err(AlphabetError::InvalidDocument(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..60, seed: u64, mode_ix in 0usize..3, raw in proptest::collection::vec(0u32..1000, 0..40)) {
            let v = vocab(n);
            let a = SymbolAlphabet::build(&v, SymbolMode::ALL[mode_ix], seed).unwrap();
            let seq: Vec<ActionId> = raw.into_iter().map(|x| ActionId(x % n as u32)).collect();
            let enc = a.encode(&seq).unwrap();
            prop_assert_eq!(a.decode(&enc).unwrap(), seq);
        }

        #[test]
        fn random_mode_is_a_permutation_of_pool_prefix(n in 1usize..=RANDOM_POOL_SIZE, seed: u64) {
            let a = SymbolAlphabet::build(&vocab(n), SymbolMode::Random, seed).unwrap();
            let syms: std::collections::HashSet<_> = (0..n).map(|i| a.symbol(ActionId(i as u32)).unwrap().to_owned()).collect();
            prop_assert_eq!(syms.len(), n);
        }
    }
}
