//! Shared fixtures for the integration tests: synthetic treebanks and
//! corpora, an exhaustive parse enumerator independent of the decoder, and
//! a sentence sampler that draws from a trained model.

// Each integration test target compiles its own copy and uses a subset.
#![allow(dead_code)]

use synlm::model::{
    derivation_of_forest, ParserAction, ParserSituation, SlmModel, WordParsePrefix,
};
use synlm::rng::SplitMix64;
use synlm::symtab::{Sym, SymbolTable};
use synlm::treebank::HeadedTree;

pub fn leaf(tag: &str, word: &str) -> HeadedTree {
    HeadedTree::Leaf {
        tag: tag.to_string(),
        word: word.to_string(),
    }
}

/// Random binary headed tree over `n` random leaves.
pub fn random_tree(
    rng: &mut SplitMix64,
    words: &[&str],
    tags: &[&str],
    nts: &[&str],
    n: usize,
) -> HeadedTree {
    fn build(rng: &mut SplitMix64, leaves: &mut Vec<HeadedTree>, nts: &[&str]) -> HeadedTree {
        if leaves.len() == 1 {
            return leaves.pop().unwrap();
        }
        let split = 1 + rng.below(leaves.len() - 1);
        let mut right: Vec<HeadedTree> = leaves.split_off(split);
        let l = build(rng, leaves, nts);
        let r = build(rng, &mut right, nts);
        let lab = rng.below(nts.len());
        HeadedTree::Binary {
            label: nts[lab].to_string(),
            head_from_right: rng.below(2) == 1,
            left: Box::new(l),
            right: Box::new(r),
        }
    }
    let mut leaves: Vec<HeadedTree> = (0..n)
        .map(|_| {
            let t = rng.below(tags.len());
            let w = rng.below(words.len());
            leaf(tags[t], words[w])
        })
        .collect();
    build(rng, &mut leaves, nts)
}

pub fn random_treebank(
    seed: u64,
    count: usize,
    words: &[&str],
    tags: &[&str],
    nts: &[&str],
) -> Vec<HeadedTree> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let n = 2 + rng.below(5);
            random_tree(&mut rng, words, tags, nts, n)
        })
        .collect()
}

/// A toy grammar with informative structure: determiners, nouns and verbs
/// are disjoint word classes, noun phrases are optionally determined, and
/// verb phrases are optionally transitive. Unlike uniformly random trees,
/// the tagger and parser components carry real signal here.
pub fn grammar_tree(rng: &mut SplitMix64) -> HeadedTree {
    const DETS: [&str; 2] = ["d0", "d1"];
    const NOUNS: [&str; 4] = ["n0", "n1", "n2", "n3"];
    const VERBS: [&str; 3] = ["v0", "v1", "v2"];
    fn np(rng: &mut SplitMix64) -> HeadedTree {
        let n = leaf("N", NOUNS[rng.below(NOUNS.len())]);
        if rng.below(2) == 0 {
            HeadedTree::Binary {
                label: "NP".to_string(),
                head_from_right: true,
                left: Box::new(leaf("D", DETS[rng.below(DETS.len())])),
                right: Box::new(n),
            }
        } else {
            HeadedTree::Unary {
                label: "NP".to_string(),
                child: Box::new(n),
            }
        }
    }
    fn vp(rng: &mut SplitMix64) -> HeadedTree {
        let v = leaf("V", VERBS[rng.below(VERBS.len())]);
        if rng.below(2) == 0 {
            HeadedTree::Binary {
                label: "VP".to_string(),
                head_from_right: false,
                left: Box::new(v),
                right: Box::new(np(rng)),
            }
        } else {
            HeadedTree::Unary {
                label: "VP".to_string(),
                child: Box::new(v),
            }
        }
    }
    let subject = np(rng);
    let predicate = vp(rng);
    HeadedTree::Binary {
        label: "S".to_string(),
        head_from_right: true,
        left: Box::new(subject),
        right: Box::new(predicate),
    }
}

pub fn grammar_treebank(seed: u64, count: usize) -> Vec<HeadedTree> {
    let mut rng = SplitMix64::new(seed);
    (0..count).map(|_| grammar_tree(&mut rng)).collect()
}

pub fn random_corpus(seed: u64, sentences: usize, max_len: usize, words: &[&str]) -> Vec<Vec<String>> {
    let mut rng = SplitMix64::new(seed);
    (0..sentences)
        .map(|_| {
            let len = 1 + rng.below(max_len);
            (0..len)
                .map(|_| {
                    let w = rng.below(words.len());
                    words[w].to_string()
                })
                .collect()
        })
        .collect()
}

pub fn to_syms(model: &SlmModel, sentence: &[String]) -> Vec<Sym> {
    sentence.iter().map(|w| model.word_sym(w)).collect()
}

/// Every headed binary tree over a span of tagged leaves: optional unary
/// relabeling over each leaf, every split, every label and head origin.
fn span_trees(leaves: &[(String, String)], nts: &[&str]) -> Vec<HeadedTree> {
    if leaves.len() == 1 {
        let (tag, word) = &leaves[0];
        let base = leaf(tag, word);
        let mut out = vec![base.clone()];
        for nt in nts {
            out.push(HeadedTree::Unary {
                label: nt.to_string(),
                child: Box::new(base.clone()),
            });
        }
        return out;
    }
    let mut out = Vec::new();
    for split in 1..leaves.len() {
        for l in span_trees(&leaves[..split], nts) {
            for r in span_trees(&leaves[split..], nts) {
                for nt in nts {
                    for head_from_right in [false, true] {
                        out.push(HeadedTree::Binary {
                            label: nt.to_string(),
                            head_from_right,
                            left: Box::new(l.clone()),
                            right: Box::new(r.clone()),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Every forest over the tagged leaves: a partition into consecutive spans
/// with every tree per span.
fn forests(leaves: &[(String, String)], nts: &[&str]) -> Vec<Vec<HeadedTree>> {
    if leaves.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=leaves.len() {
        for tree in span_trees(&leaves[..first], nts) {
            for rest in forests(&leaves[first..], nts) {
                let mut forest = Vec::with_capacity(1 + rest.len());
                forest.push(tree.clone());
                forest.extend(rest);
                out.push(forest);
            }
        }
    }
    out
}

fn taggings(words: &[&str], tags: &[&str]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for w in words {
        let mut next = Vec::with_capacity(out.len() * tags.len());
        for partial in &out {
            for t in tags {
                let mut p = partial.clone();
                p.push((t.to_string(), w.to_string()));
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Brute-force sum of P(W,T) over every complete parse: all taggings, all
/// forests, all labelings, scored through the unique derivation of each.
/// Independent of the multi-stack search.
pub fn enumerate_joint_probability(
    model: &SlmModel,
    words: &[&str],
    tags: &[&str],
    nts: &[&str],
) -> f64 {
    let mut tab: SymbolTable = (*model.symtab).clone();
    let sp = model.specials;
    let mut total = 0.0;
    for tagging in taggings(words, tags) {
        for forest in forests(&tagging, nts) {
            let derivation =
                derivation_of_forest(&forest, &mut tab, &sp).expect("enumerated forest is valid");
            let lp = model
                .joint_logprob(&derivation)
                .expect("model scores every derivation");
            total += lp.exp();
        }
    }
    total
}

/// Count the complete parses the enumeration produces (decoder-free).
pub fn enumerate_parse_count(words: &[&str], tags: &[&str], nts: &[&str]) -> usize {
    taggings(words, tags)
        .iter()
        .map(|tagging| forests(tagging, nts).len())
        .sum()
}

/// Sample a sentence from the model by rolling its own distributions
/// through the word-parse state machine. Returns `None` when the sentence
/// exceeds `max_len` (resample with the next seed).
pub fn sample_sentence(model: &SlmModel, rng: &mut SplitMix64, max_len: usize) -> Option<Vec<Sym>> {
    let sp = model.specials;
    let mut prefix = WordParsePrefix::new(&sp);
    let mut words = Vec::new();
    loop {
        // Word.
        let w = {
            let mut r = rng.next_f64();
            let mut chosen = None;
            for &cand in model.predictor.alphabet() {
                let p = model.predictor_prob(&prefix, cand).expect("in alphabet");
                if r < p {
                    chosen = Some(cand);
                    break;
                }
                r -= p;
            }
            chosen.unwrap_or(sp.eos)
        };
        if w == sp.eos {
            if words.is_empty() {
                return None;
            }
            return Some(words);
        }
        if words.len() >= max_len {
            return None;
        }
        words.push(w);
        // Tag.
        let t = {
            let mut r = rng.next_f64();
            let mut chosen = None;
            for &cand in model.tagger.alphabet() {
                let p = model.tagger_prob(&prefix, w, cand).expect("in alphabet");
                if r < p {
                    chosen = Some(cand);
                    break;
                }
                r -= p;
            }
            chosen.unwrap_or(*model.tagger.alphabet().last().expect("non-empty"))
        };
        prefix.shift(w, t);
        // Parser moves until null.
        loop {
            let sit = model.situation(&prefix);
            if let Some(forced) = sit.forced_action(&sp) {
                if forced == ParserAction::Null {
                    break;
                }
                prefix.apply(forced).expect("forced action applies");
                continue;
            }
            debug_assert!(matches!(
                sit,
                ParserSituation::Open | ParserSituation::OpenAtBos | ParserSituation::OpenNonLeaf
            ));
            let legal = model.legal_actions(&prefix);
            let mut r = rng.next_f64();
            let mut chosen = ParserAction::Null;
            for action in legal {
                let p = model.parser_prob(&prefix, action).expect("legal action");
                if r < p {
                    chosen = action;
                    break;
                }
                r -= p;
            }
            if chosen == ParserAction::Null {
                break;
            }
            prefix.apply(chosen).expect("legal action applies");
        }
    }
}
