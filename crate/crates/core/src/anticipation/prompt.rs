//! Prompt rendering for language-model anticipation.
//!
//! Every style has the same layout, only the three header lines change:
//!
//! ```text
//! <context header>
//! <context sequence 1>
//! …
//! <input header>
//! <history>,
//! <output header>
//! ```
//!
//! Sequences are comma-separated symbols with no spaces added. The history
//! line ends with a trailing comma so the model's continuation is the next
//! symbol. Templates are documented in `docs/prompts.md` and pinned by
//! golden files.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnticipationError, ContextSet};
use crate::alphabet::SymbolAlphabet;
use crate::types::ActionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    ReferencedContext,
    UnreferencedContext,
    Elaborate,
}

pub struct PromptTemplate {
    pub context_header: &'static str,
    pub input_header: &'static str,
    pub output_header: &'static str,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 3] = [
        PromptStyle::ReferencedContext,
        PromptStyle::UnreferencedContext,
        PromptStyle::Elaborate,
    ];

    pub fn template(self) -> PromptTemplate {
        match self {
            PromptStyle::ReferencedContext => PromptTemplate {
                context_header: "Given the following sequences:",
                input_header: "Complete the sequence:",
                output_header: "Answer:",
            },
            PromptStyle::UnreferencedContext => PromptTemplate {
                context_header: "Context:",
                input_header: "Input:",
                output_header: "Output:",
            },
            PromptStyle::Elaborate => PromptTemplate {
                context_header: "Given the sequences of the following type:",
                input_header: "Complete the following sequence:",
                output_header: "Sequence is completed with:",
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::ReferencedContext => "referenced_context",
            PromptStyle::UnreferencedContext => "unreferenced_context",
            PromptStyle::Elaborate => "elaborate",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "referenced_context" => Ok(PromptStyle::ReferencedContext),
            "unreferenced_context" => Ok(PromptStyle::UnreferencedContext),
            "elaborate" => Ok(PromptStyle::Elaborate),
            other => Err(format!("unknown prompt style {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PromptSpec<'a> {
    pub style: PromptStyle,
    pub alphabet: &'a SymbolAlphabet,
    pub context: &'a ContextSet,
    pub history: &'a [ActionId],
}

pub fn render_prompt(spec: &PromptSpec<'_>) -> Result<String, AnticipationError> {
    if spec.history.is_empty() {
        return Err(AnticipationError::EmptyHistory);
    }
    let t = spec.style.template();
    let mut out = String::new();
    out.push_str(t.context_header);
    out.push('\n');
    for (_, seq) in &spec.context.sequences {
        out.push_str(&spec.alphabet.encode(seq)?.join(","));
        out.push('\n');
    }
    out.push_str(t.input_header);
    out.push('\n');
    let _ = writeln!(out, "{},", spec.alphabet.encode(spec.history)?.join(","));
    out.push_str(t.output_header);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::SymbolMode;
    use crate::anticipation::ContextPolicy;
    use crate::types::ActionVocabulary;

    fn alphabet(n: usize) -> SymbolAlphabet {
        let names: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
        SymbolAlphabet::build(
            &ActionVocabulary::build(&names).unwrap(),
            SymbolMode::Numerical,
            0,
        )
        .unwrap()
    }

    fn context(raw: &[&[u32]]) -> ContextSet {
        ContextSet::new(
            raw.iter()
                .map(|s| (String::new(), ActionId::seq(s)))
                .collect(),
            ContextPolicy::SameTask,
        )
    }

    #[test]
    fn unreferenced_layout() {
        let a = alphabet(2);
        let c = context(&[&[0, 1]]);
        let h = ActionId::seq(&[0]);
        let spec = PromptSpec {
            style: PromptStyle::UnreferencedContext,
            alphabet: &a,
            context: &c,
            history: &h,
        };
        assert_eq!(
            render_prompt(&spec).unwrap(),
            "Context:\n0,1\nInput:\n0,\nOutput:\n"
        );
        assert_eq!(render_prompt(&spec).unwrap(), render_prompt(&spec).unwrap());
    }

    #[test]
    fn elaborate_phrases() {
        let a = alphabet(3);
        let c = context(&[&[0, 1, 2]]);
        let h = ActionId::seq(&[0, 1]);
        let p = render_prompt(&PromptSpec {
            style: PromptStyle::Elaborate,
            alphabet: &a,
            context: &c,
            history: &h,
        })
        .unwrap();
        for phrase in [
            "Given the sequences of the following type:",
            "Complete the following sequence",
            "Sequence is completed with",
        ] {
            assert!(p.contains(phrase), "{phrase}");
        }
    }

    #[test]
    fn unencodable_and_empty() {
        let a = alphabet(2);
        let c = context(&[&[0, 5]]);
        let h = ActionId::seq(&[0]);
        let spec = PromptSpec {
            style: PromptStyle::ReferencedContext,
            alphabet: &a,
            context: &c,
            history: &h,
        };
        assert_eq!(
            render_prompt(&spec),
            Err(AnticipationError::UnencodableAction(ActionId(5)))
        );
        let spec = PromptSpec {
            history: &[],
            ..spec
        };
        assert_eq!(render_prompt(&spec), Err(AnticipationError::EmptyHistory));
    }

    #[test]
    fn length_is_monotone() {
        let a = alphabet(4);
        let mut previous = 0;
        for n_ctx in 0..4 {
            let raw: Vec<Vec<u32>> = (0..n_ctx).map(|i| vec![i, 3]).collect();
            let refs: Vec<&[u32]> = raw.iter().map(Vec::as_slice).collect();
            let c = context(&refs);
            let mut prev_h = 0;
            for len in 1..6 {
                let h: Vec<ActionId> = (0..len).map(|i| ActionId(i % 4)).collect();
                let p = render_prompt(&PromptSpec {
                    style: PromptStyle::ReferencedContext,
                    alphabet: &a,
                    context: &c,
                    history: &h,
                })
                .unwrap();
                assert!(p.len() >= prev_h);
                prev_h = p.len();
                if len == 1 {
                    assert!(p.len() >= previous);
                    previous = p.len();
                }
            }
        }
    }
}
