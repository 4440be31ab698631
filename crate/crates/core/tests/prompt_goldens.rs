//! Prompt text is pinned by golden files. Set `PREGO_BLESS=1` to rewrite them.

mod common;

use common::{golden_path, golden_prompt, STYLES};
use prego_core::alphabet::SymbolMode;

#[test]
fn prompts_match_golden_files() {
    let bless = std::env::var_os("PREGO_BLESS").is_some();
    for style in STYLES {
        for mode in SymbolMode::ALL {
            let rendered = golden_prompt(style, mode);
            let path = golden_path(style, mode);
            if bless {
                std::fs::write(&path, &rendered).unwrap();
                continue;
            }
            let expected = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(rendered, expected, "{}", path.display());
        }
    }
}

#[test]
fn numerical_unreferenced_is_spelled_out() {
    assert_eq!(
        golden_prompt(
            prego_core::anticipation::PromptStyle::UnreferencedContext,
            SymbolMode::Numerical
        ),
        "Context:\n0,1,2,3,4\n0,1,3,2,4\nInput:\n0,1,3,\nOutput:\n"
    );
}
