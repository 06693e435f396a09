//! Left-to-right decoding with the multi-stack pruned search: initialize a
//! model from a toy treebank, scan a sentence, inspect the surviving
//! partial parses and the best complete parse.
//!
//! Run with `cargo run -p synlm --example decode_sentence`.

use synlm::decoder::{decode, normalized_weights, SearchParams};
use synlm::interp::two_bucket_bounds;
use synlm::model::replay;
use synlm::trainer::{init_from_treebank, InitConfig};
use synlm::treebank::parse_annotated;

fn main() -> synlm::Result<()> {
    let treebank = [
        "(S~barks~V~1 (NP~dog~N~1 (D the) (N dog)) (V barks))",
        "(S~barks~V~1 (NP~dog~N~1 (D a) (N dog)) (V barks))",
        "(S~sees~V~1 (NP~cat~N~1 (D the) (N cat)) (VP~sees~V~0 (V sees) (NP~dog~N~1 (D a) (N dog))))",
        "(S~sees~V~1 (NP~dog~N~1 (D the) (N dog)) (VP~sees~V~0 (V sees) (NP~cat~N~1 (D the) (N cat))))",
        "(S~runs~V~1 (N cat) (V runs))",
        "(S~runs~V~1 (NP~cat~N~1 (D a) (N cat)) (V runs))",
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

    let sentence = "the dog sees a cat";
    let words: Vec<_> = sentence
        .split_whitespace()
        .map(|w| model.word_sym(w))
        .collect();
    let params = SearchParams {
        max_stack_depth: 6,
        ..SearchParams::default()
    };
    let result = decode(&model, &words, &params)?;

    println!("sentence: {}\n", sentence);
    for (k, hyps) in result.per_position.iter().enumerate() {
        let refs: Vec<_> = hyps.iter().collect();
        let weights = normalized_weights(&refs);
        println!("position {}: {} surviving partial parses", k, refs.len());
        for (hyp, rho) in refs.iter().zip(weights).take(3) {
            let heads: Vec<String> = hyp
                .prefix
                .heads()
                .iter()
                .map(|h| {
                    format!(
                        "({},{})",
                        model.symtab.name(h.word),
                        model.symtab.name(h.tag)
                    )
                })
                .collect();
            println!("    rho={:.3} logp={:+.3} heads {}", rho, hyp.logp, heads.join(" "));
        }
    }

    println!("\n{} complete parses; best:", result.completes.len());
    let best = result.best().expect("decode yields a complete parse");
    let tree = replay(&best.events(), &model.symtab)?;
    println!("  logp {:+.4}", best.logp);
    println!("  {}", tree.render());
    Ok(())
}
