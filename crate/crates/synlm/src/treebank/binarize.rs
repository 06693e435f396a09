//! Binarization of head-annotated n-ary constituents.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{HeadedNary, HeadedTree};

/// Scheme A attaches right modifiers first (left-branching around the
/// head), then left modifiers via right branching; scheme B the reverse.
/// Whenever the head is leftmost or rightmost the two schemes coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    A,
    B,
}

#[derive(Debug, Clone, Default)]
pub struct BinarizationRuleSet {
    entries: HashMap<String, Scheme>,
}

impl BinarizationRuleSet {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let label = toks
                .next()
                .ok_or_else(|| Error::Config("missing binarization label".into()))?;
            let scheme = match toks.next() {
                Some("A") => Scheme::A,
                Some("B") => Scheme::B,
                other => {
                    return Err(Error::Config(format!(
                        "binarization rule `{}`: bad scheme {:?}",
                        label, other
                    )))
                }
            };
            entries.insert(label.to_string(), scheme);
        }
        Ok(BinarizationRuleSet { entries })
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/binarization-rules.txt"))
            .expect("builtin binarization rules must parse")
    }

    pub fn get(&self, label: &str) -> Result<Scheme> {
        self.entries
            .get(label)
            .copied()
            .ok_or_else(|| Error::MissingBinRule(label.to_string()))
    }
}

/// Binarize a head-annotated constituent tree. New internal nodes carry the
/// primed label `Z'`; every intermediate node sits on the head spine, so
/// head annotations are preserved.
pub fn binarize(tree: &HeadedNary, rules: &BinarizationRuleSet) -> Result<HeadedTree> {
    if let Some(word) = &tree.word {
        return Ok(HeadedTree::Leaf {
            tag: tree.label.clone(),
            word: word.clone(),
        });
    }
    if tree.children.len() == 1 {
        let child = binarize(&tree.children[0], rules)?;
        return match child {
            leaf @ HeadedTree::Leaf { .. } => Ok(HeadedTree::Unary {
                label: tree.label.clone(),
                child: Box::new(leaf),
            }),
            _ => Err(Error::InvalidParse(format!(
                "unary production {} over a non-POS child survived splicing",
                tree.label
            ))),
        };
    }

    let children: Vec<HeadedTree> = tree
        .children
        .iter()
        .map(|c| binarize(c, rules))
        .collect::<Result<_>>()?;
    let k = tree.head_child;
    let scheme = rules.get(&tree.label)?;
    let prime = format!("{}'", tree.label);

    let attach_right = |node: HeadedTree, child: HeadedTree, label: &str| HeadedTree::Binary {
        label: label.to_string(),
        head_from_right: false,
        left: Box::new(node),
        right: Box::new(child),
    };
    let attach_left = |child: HeadedTree, node: HeadedTree, label: &str| HeadedTree::Binary {
        label: label.to_string(),
        head_from_right: true,
        left: Box::new(child),
        right: Box::new(node),
    };

    let mut iter = children.into_iter();
    let mut left: Vec<HeadedTree> = Vec::with_capacity(k);
    for _ in 0..k {
        left.push(iter.next().unwrap());
    }
    let mut node = iter.next().unwrap();
    let right: Vec<HeadedTree> = iter.collect();

    // The very last attachment gets the original label.
    let total = left.len() + right.len();
    let mut attached = 0;
    let label_for_next = |attached: &mut usize| -> String {
        *attached += 1;
        if *attached == total {
            tree.label.clone()
        } else {
            prime.clone()
        }
    };

    match scheme {
        Scheme::A => {
            for child in right {
                let l = label_for_next(&mut attached);
                node = attach_right(node, child, &l);
            }
            for child in left.into_iter().rev() {
                let l = label_for_next(&mut attached);
                node = attach_left(child, node, &l);
            }
        }
        Scheme::B => {
            for child in left.into_iter().rev() {
                let l = label_for_next(&mut attached);
                node = attach_left(child, node, &l);
            }
            for child in right {
                let l = label_for_next(&mut attached);
                node = attach_right(node, child, &l);
            }
        }
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{parse_bracketed, percolate_headwords, PercolationRuleSet};

    fn headed(text: &str) -> HeadedNary {
        let rules = PercolationRuleSet::builtin();
        let tree = parse_bracketed(text).unwrap().into_iter().next().unwrap();
        percolate_headwords(&tree, &rules).unwrap()
    }

    fn mixed_rules() -> BinarizationRuleSet {
        BinarizationRuleSet::builtin()
    }

    #[test]
    fn width_two_is_unchanged_under_both_schemes() {
        let h = headed("(NP (CD 61) (NNS years))");
        for scheme in ["Z A\nNP A\n", "Z B\nNP B\n"] {
            let rules = BinarizationRuleSet::parse(scheme).unwrap();
            let t = binarize(&h, &rules).unwrap();
            match &t {
                HeadedTree::Binary { label, head_from_right, .. } => {
                    assert_eq!(label, "NP");
                    assert!(*head_from_right);
                }
                other => panic!("unexpected {:?}", other),
            }
            assert_eq!(t.head_word(), "years");
        }
    }

    #[test]
    fn head_first_constituent_same_chain_under_a_and_b() {
        // Z -> Y1 Y2 Y3 with head k=1: every intermediate node keeps the
        // head, so both schemes produce the same chain.
        let raw = "(VP (VB eat) (NP (NN fish)) (ADVP (RB fast)))";
        let h = headed(raw);
        assert_eq!(h.head_child, 0);
        let a = binarize(&h, &BinarizationRuleSet::parse("VP A\nNP B\nADVP B\n").unwrap()).unwrap();
        let b = binarize(&h, &BinarizationRuleSet::parse("VP B\nNP B\nADVP B\n").unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.render(), "(VP~eat~VB~0 (VP'~eat~VB~0 (VB eat) (NP~fish~NN~0 (NN fish))) (ADVP~fast~RB~0 (RB fast)))");
    }

    #[test]
    fn head_last_constituent_same_chain_under_a_and_b() {
        let raw = "(NP (DT the) (JJ big) (NN dog))";
        let h = headed(raw);
        assert_eq!(h.head_child, 2);
        let a = binarize(&h, &BinarizationRuleSet::parse("NP A\n").unwrap()).unwrap();
        let b = binarize(&h, &BinarizationRuleSet::parse("NP B\n").unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.render(),
            "(NP~dog~NN~1 (DT the) (NP'~dog~NN~1 (JJ big) (NN dog)))"
        );
    }

    #[test]
    fn schemes_differ_for_interior_head() {
        // Head in the middle: A folds the right modifier in first, B the
        // left one.
        let h = HeadedNary {
            label: "S".into(),
            head_child: 1,
            word: None,
            children: ["a", "b", "c"]
                .iter()
                .map(|w| HeadedNary {
                    label: "X".into(),
                    head_child: 0,
                    children: Vec::new(),
                    word: Some(w.to_string()),
                })
                .collect(),
        };
        let a = binarize(&h, &BinarizationRuleSet::parse("S A\n").unwrap()).unwrap();
        let b = binarize(&h, &BinarizationRuleSet::parse("S B\n").unwrap()).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.render(), "(S~b~X~1 (X a) (S'~b~X~0 (X b) (X c)))");
        assert_eq!(b.render(), "(S~b~X~0 (S'~b~X~1 (X a) (X b)) (X c))");
        // Both preserve the leaf sequence and the head.
        for t in [&a, &b] {
            assert_eq!(t.words(), vec!["a", "b", "c"]);
            assert_eq!(t.head_word(), "b");
        }
    }

    #[test]
    fn binarization_preserves_leaves_and_heads() {
        let raw = "(S (NP (NNP Pierre) (NNP Vinken)) (VP (MD will) (VP (VB join) (NP (DT the) (NN board)))) (. .))";
        let h = headed(raw);
        let t = binarize(&h, &mixed_rules()).unwrap();
        assert_eq!(
            t.words(),
            vec!["Pierre", "Vinken", "will", "join", "the", "board", "."]
        );
        assert_eq!(t.head_word(), "will");
        // Every internal node is binary or a POS-over-word unary.
        fn check(t: &HeadedTree) {
            match t {
                HeadedTree::Leaf { .. } => {}
                HeadedTree::Unary { child, .. } => {
                    assert!(matches!(**child, HeadedTree::Leaf { .. }));
                    check(child);
                }
                HeadedTree::Binary { left, right, .. } => {
                    check(left);
                    check(right);
                }
            }
        }
        check(&t);
    }
}
