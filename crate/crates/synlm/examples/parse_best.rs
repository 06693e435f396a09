//! Using the model as a parser: decode and keep the highest-scoring
//! complete parse, optionally constrained to join all words under a
//! single root constituent.
//!
//! Run with `cargo run -p synlm --example parse_best`.

use synlm::decoder::{decode, SearchParams};
use synlm::interp::two_bucket_bounds;
use synlm::model::{complete_parse_forest, replay};
use synlm::trainer::{init_from_treebank, InitConfig};
use synlm::treebank::parse_annotated;

fn main() -> synlm::Result<()> {
    let treebank = [
        "(S~flies~V~1 (NP~time~N~0 (N time)) (V flies))",
        "(S~flies~V~1 (NP~arrow~N~1 (D an) (N arrow)) (V flies))",
        "(S~likes~V~1 (N time) (VP~likes~V~0 (V likes) (NP~arrow~N~1 (D an) (N arrow))))",
        "(S~likes~V~1 (NP~fruit~N~1 (D a) (N fruit)) (VP~likes~V~0 (V likes) (N time)))",
        "(S~flies~V~1 (NP~fruit~N~1 (D a) (N fruit)) (V flies))",
    ];
    let trees: Vec<_> = treebank
        .iter()
        .flat_map(|t| parse_annotated(t).unwrap())
        .collect();
    let cfg = InitConfig {
        bounds: two_bucket_bounds(),
        ..InitConfig::default()
    };
    let model = init_from_treebank(&trees, &cfg)?;

    for sentence in ["time flies", "a fruit likes an arrow"] {
        let words: Vec<_> = sentence
            .split_whitespace()
            .map(|w| model.word_sym(w))
            .collect();
        for single_root in [false, true] {
            let params = SearchParams {
                max_stack_depth: 8,
                single_root,
                ..SearchParams::default()
            };
            let result = decode(&model, &words, &params)?;
            let best = result.best().expect("a complete parse survived");
            let complete = replay(&best.events(), &model.symtab)?;
            let forest = complete_parse_forest(&complete)?;
            println!(
                "{:<24} single_root={:<5} logp {:+.3}  {} sentence constituent(s)",
                sentence,
                single_root,
                best.logp,
                forest.len()
            );
            for tree in forest {
                println!("    {}", tree.render());
            }
        }
    }
    Ok(())
}
