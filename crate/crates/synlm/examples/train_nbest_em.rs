//! Two-stage reestimation: N-best EM over all three components, then the
//! separate left-to-right word predictor. The N-best sample is whatever
//! survives the pruned search, so the sampling strategy is the pruning
//! strategy.
//!
//! Run with `cargo run -p synlm --example train_nbest_em`.

use synlm::decoder::SearchParams;
use synlm::eval::perplexity;
use synlm::interp::two_bucket_bounds;
use synlm::rng::SplitMix64;
use synlm::symtab::Sym;
use synlm::trainer::{
    ensure_l2r_predictor, init_from_treebank, l2r_reestimation_iteration, nbest_em_iteration,
    InitConfig,
};
use synlm::treebank::HeadedTree;

fn leaf(tag: &str, word: &str) -> HeadedTree {
    HeadedTree::Leaf {
        tag: tag.into(),
        word: word.into(),
    }
}

/// Tiny grammar: (S (NP [det] noun) (VP verb [NP])).
fn sample_tree(rng: &mut SplitMix64) -> HeadedTree {
    let dets = ["the", "a"];
    let nouns = ["dog", "cat", "bird", "fox"];
    let verbs = ["sees", "chases", "finds"];
    let np = |rng: &mut SplitMix64| -> HeadedTree {
        let noun = leaf("N", nouns[rng.below(4)]);
        if rng.below(2) == 0 {
            HeadedTree::Binary {
                label: "NP".into(),
                head_from_right: true,
                left: Box::new(leaf("D", dets[rng.below(2)])),
                right: Box::new(noun),
            }
        } else {
            HeadedTree::Unary { label: "NP".into(), child: Box::new(noun) }
        }
    };
    let verb = leaf("V", verbs[rng.below(3)]);
    let vp = if rng.below(2) == 0 {
        HeadedTree::Binary {
            label: "VP".into(),
            head_from_right: false,
            left: Box::new(verb),
            right: Box::new(np(rng)),
        }
    } else {
        HeadedTree::Unary { label: "VP".into(), child: Box::new(verb) }
    };
    HeadedTree::Binary {
        label: "S".into(),
        head_from_right: true,
        left: Box::new(np(rng)),
        right: Box::new(vp),
    }
}

fn main() -> synlm::Result<()> {
    let mut rng = SplitMix64::new(2024);
    let trees: Vec<HeadedTree> = (0..150).map(|_| sample_tree(&mut rng)).collect();
    let cfg = InitConfig {
        bounds: two_bucket_bounds(),
        ..InitConfig::default()
    };
    let mut model = init_from_treebank(&trees, &cfg)?;

    // Training sentences are the treebank yields; the parses stay hidden.
    let corpus: Vec<Vec<Sym>> = trees
        .iter()
        .map(|t| t.words().iter().map(|w| model.word_sym(w)).collect())
        .collect();
    let params = SearchParams {
        max_stack_depth: 8,
        ..SearchParams::default()
    };

    println!("stage 1: N-best EM over predictor, tagger and parser");
    for iteration in 1..=3 {
        let (next, report) = nbest_em_iteration(&model, &corpus, &params)?;
        model = next;
        let ppl = perplexity(&model, &corpus, &params, None)?;
        println!(
            "  iteration {}: objective {:.2}, dev L2R-PPL {:.4}, skipped {}, predictor types {:?}",
            iteration, report.likelihood, ppl.l2r_ppl, report.skipped, report.predictor_census
        );
    }

    println!("stage 2: separate left-to-right word predictor");
    ensure_l2r_predictor(&mut model)?;
    for iteration in 1..=3 {
        let (next, likelihood, _) = l2r_reestimation_iteration(&model, &corpus, &params)?;
        model = next;
        let ppl = perplexity(&model, &corpus, &params, None)?;
        println!(
            "  iteration {}: mixture log-likelihood {:.2}, dev L2R-PPL {:.4}",
            iteration, likelihood, ppl.l2r_ppl
        );
    }
    Ok(())
}
