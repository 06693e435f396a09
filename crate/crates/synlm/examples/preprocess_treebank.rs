//! Treebank preprocessing: parse bracketed trees, percolate headwords,
//! binarize, and emit the derivation of elementary model events.
//!
//! Run with `cargo run -p synlm --example preprocess_treebank`.

use synlm::model::{derivation_of_tree, derivation_to_text, Specials};
use synlm::symtab::SymbolTable;
use synlm::treebank::{parse_bracketed, preprocess, BinarizationRuleSet, PercolationRuleSet};

fn main() -> synlm::Result<()> {
    let text = "( (S \
        (NP-SBJ (DT the) (NN contract)) \
        (VP (VBD ended) \
            (PP (IN with) (NP (DT a) (NN loss)))) \
        (. .) ))";

    let raw = parse_bracketed(text)?.remove(0);
    println!("raw tree (functional tags stripped):\n  {}\n", raw.render());

    let heads = PercolationRuleSet::builtin();
    let bins = BinarizationRuleSet::builtin();
    let binary = preprocess(raw, &heads, &bins)?;
    println!("binarized, head-annotated (label~headword~headpos~bit):");
    println!("  {}\n", binary.render());
    println!("sentence head: {} ({})", binary.head_word(), binary.head_pos());

    let mut tab = SymbolTable::new();
    let sp = Specials::intern(&mut tab);
    let derivation = derivation_of_tree(&binary, &mut tab, &sp)?;
    println!("\nderivation ({} events):", derivation.len());
    print!("{}", derivation_to_text(&derivation, &tab));
    Ok(())
}
