//! Perplexity evaluation: the four variants, the fudge factor on the
//! structural scores, interpolation with a trigram, and depth statistics.
//!
//! Run with `cargo run -p synlm --example perplexity`.

use std::sync::Arc;

use synlm::decoder::SearchParams;
use synlm::eval::{depth_stats, perplexity, Interpolation, NgramLm};
use synlm::interp::{two_bucket_bounds, EventCounts, InterpModel, LambdaBuckets};
use synlm::model::{BOS, PAD};
use synlm::symtab::Sym;
use synlm::trainer::{init_from_treebank, InitConfig};
use synlm::treebank::parse_annotated;

fn main() -> synlm::Result<()> {
    let treebank = [
        "(S~barks~V~1 (NP~dog~N~1 (D the) (N dog)) (V barks))",
        "(S~sees~V~1 (NP~cat~N~1 (D the) (N cat)) (VP~sees~V~0 (V sees) (NP~dog~N~1 (D a) (N dog))))",
        "(S~runs~V~1 (N cat) (V runs))",
        "(S~sees~V~1 (NP~dog~N~1 (D a) (N dog)) (VP~sees~V~0 (V sees) (N cat)))",
        "(S~barks~V~1 (NP~dog~N~1 (D a) (N dog)) (V barks))",
        "(S~runs~V~1 (NP~cat~N~1 (D the) (N cat)) (V runs))",
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

    let dev = ["the dog barks", "a cat runs", "the cat sees a dog"];
    let corpus: Vec<Vec<Sym>> = dev
        .iter()
        .map(|s| s.split_whitespace().map(|w| model.word_sym(w)).collect())
        .collect();
    let params = SearchParams::default();

    let report = perplexity(&model, &corpus, &params, None)?;
    print!("{}", report.render());

    // The fudge factor reweights tagger/parser scores inside hypothesis
    // ranking; 1.0 is the correct probability assignment.
    for gamma in [0.2, 1.0, 5.0] {
        let fudged = perplexity(
            &model,
            &corpus,
            &SearchParams {
                fudge: gamma,
                ..params.clone()
            },
            None,
        )?;
        println!("fudge={:<4} L2R-PPL {:.4}", gamma, fudged.l2r_ppl);
    }

    // Interpolate with a word trigram built over the same vocabulary.
    let tab = Arc::clone(&model.symtab);
    let mut tri_counts = EventCounts::new(2);
    let bos = tab.get(BOS).unwrap();
    let pad = tab.get(PAD).unwrap();
    for sent in &corpus {
        for k in 0..=sent.len() {
            let u = if k < sent.len() { sent[k] } else { model.specials.eos };
            let z1 = if k >= 1 { sent[k - 1] } else { bos };
            let z2 = if k >= 2 { sent[k - 2] } else if k == 1 { bos } else { pad };
            tri_counts.add(u, &[z1, z2], 1.0)?;
        }
    }
    let trigram = InterpModel::new(
        Arc::clone(&tab),
        model.predictor.alphabet().to_vec(),
        tri_counts,
        LambdaBuckets::init(2, &two_bucket_bounds()),
    )?;
    let interp = Interpolation {
        trigram: NgramLm { model: &trigram, bos, pad },
        lambda: 0.36,
    };
    let mixed = perplexity(&model, &corpus, &params, Some(&interp))?;
    println!(
        "interpolated with trigram (lambda=0.36): {:.4}",
        mixed.interpolated_ppl.unwrap()
    );

    // How far back do the exposed heads reach?
    let depth = depth_stats(&model, &corpus, &params)?;
    println!("\nexpected depth E[D] = {:.3}", depth.expected_depth);
    print!("{}", depth.to_csv());
    Ok(())
}
