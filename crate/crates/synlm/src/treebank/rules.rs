//! Headword percolation: rule table parsing and head identification.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{HeadedNary, RawTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemKind {
    /// `_X`: a POS tag, i.e. a leaf child.
    Terminal,
    /// `~X`: a non-terminal child.
    NonTerminal,
}

/// One match-list. `<_a|~b>` matches a child in the list; `<^...>` matches
/// a child not in the list. A bare `_a` token is a one-element list.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    negated: bool,
    items: Vec<(ItemKind, String)>,
}

impl Pattern {
    fn parse(tok: &str) -> Result<Pattern> {
        let (negated, body) = if let Some(inner) = tok.strip_prefix("<^") {
            (true, inner.trim_end_matches('>'))
        } else if let Some(inner) = tok.strip_prefix('<') {
            (false, inner.trim_end_matches('>'))
        } else {
            (false, tok)
        };
        let mut items = Vec::new();
        for item in body.split('|') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            if let Some(l) = item.strip_prefix('_') {
                items.push((ItemKind::Terminal, l.to_string()));
            } else if let Some(l) = item.strip_prefix('~') {
                items.push((ItemKind::NonTerminal, l.to_string()));
            } else {
                return Err(Error::Config(format!(
                    "rule item `{}` must start with `_` or `~`",
                    item
                )));
            }
        }
        if items.is_empty() {
            return Err(Error::Config(format!("empty pattern `{}`", tok)));
        }
        Ok(Pattern { negated, items })
    }

    fn matches(&self, child: &RawTree) -> bool {
        let kind = if child.is_leaf() {
            ItemKind::Terminal
        } else {
            ItemKind::NonTerminal
        };
        let listed = self
            .items
            .iter()
            .any(|(k, l)| *k == kind && l == &child.label);
        self.negated != listed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleEntry {
    pub direction: ScanDirection,
    pub patterns: Vec<Pattern>,
}

/// Per-label head-finding rules, ranked left to right within each entry.
#[derive(Debug, Clone, Default)]
pub struct PercolationRuleSet {
    entries: HashMap<String, RuleEntry>,
}

impl PercolationRuleSet {
    /// Parse the rule table. Each entry starts at column zero with
    /// `LABEL direction patterns...`; indented lines continue the previous
    /// entry's pattern list.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, RuleEntry> = HashMap::new();
        let mut current: Option<String> = None;
        for line in text.lines() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let continuation = line.starts_with(char::is_whitespace);
            let mut toks = line.split_whitespace();
            if continuation {
                let label = current.clone().ok_or_else(|| {
                    Error::Config("continuation line before any rule entry".into())
                })?;
                let entry = entries.get_mut(&label).unwrap();
                for tok in toks {
                    entry.patterns.push(Pattern::parse(tok)?);
                }
            } else {
                let label = toks
                    .next()
                    .ok_or_else(|| Error::Config("missing rule label".into()))?
                    .to_string();
                let direction = match toks.next() {
                    Some("left") => ScanDirection::Left,
                    Some("right") => ScanDirection::Right,
                    other => {
                        return Err(Error::Config(format!(
                            "rule `{}`: bad direction {:?}",
                            label, other
                        )))
                    }
                };
                let mut patterns = Vec::new();
                for tok in toks {
                    patterns.push(Pattern::parse(tok)?);
                }
                current = Some(label.clone());
                entries.insert(label, RuleEntry { direction, patterns });
            }
        }
        Ok(PercolationRuleSet { entries })
    }

    /// The rule table shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/head-rules.txt"))
            .expect("builtin head rules must parse")
    }

    pub fn get(&self, label: &str) -> Option<&RuleEntry> {
        self.entries.get(label)
    }

    /// Head child index for a constituent, scanning in the entry's
    /// direction, first pattern that matches anything wins.
    pub fn head_position(&self, label: &str, children: &[RawTree]) -> Result<usize> {
        if children.len() == 1 {
            return Ok(0);
        }
        let entry = self
            .entries
            .get(label)
            .ok_or_else(|| Error::MissingRule(label.to_string()))?;
        let order: Vec<usize> = match entry.direction {
            ScanDirection::Left => (0..children.len()).collect(),
            ScanDirection::Right => (0..children.len()).rev().collect(),
        };
        for pattern in &entry.patterns {
            for &i in &order {
                if pattern.matches(&children[i]) {
                    return Ok(i);
                }
            }
        }
        Err(Error::PercolationFailure(format!(
            "({} {})",
            label,
            children
                .iter()
                .map(|c| c.label.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        )))
    }
}

/// Fill head positions bottom-up for a whole tree.
pub fn percolate_headwords(tree: &RawTree, rules: &PercolationRuleSet) -> Result<HeadedNary> {
    if let Some(word) = &tree.word {
        return Ok(HeadedNary {
            label: tree.label.clone(),
            head_child: 0,
            children: Vec::new(),
            word: Some(word.clone()),
        });
    }
    let children: Vec<HeadedNary> = tree
        .children
        .iter()
        .map(|c| percolate_headwords(c, rules))
        .collect::<Result<_>>()?;
    let head_child = rules.head_position(&tree.label, &tree.children)?;
    Ok(HeadedNary {
        label: tree.label.clone(),
        head_child,
        children,
        word: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_bracketed;

    fn tree(text: &str) -> RawTree {
        parse_bracketed(text).unwrap().into_iter().next().unwrap()
    }

    #[test]
    fn np_head_scans_from_the_right() {
        let rules = PercolationRuleSet::builtin();
        let t = tree("(NP (CD 61) (NNS years))");
        let headed = percolate_headwords(&t, &rules).unwrap();
        assert_eq!(headed.head_word(), "years");
        assert_eq!(headed.head_pos(), "NNS");
    }

    #[test]
    fn vp_head_scans_from_the_left() {
        let rules = PercolationRuleSet::builtin();
        let t = tree("(VP (MD will) (VP (VB join) (NP (DT the) (NN board))))");
        let headed = percolate_headwords(&t, &rules).unwrap();
        assert_eq!(headed.head_word(), "will");
    }

    #[test]
    fn single_child_is_the_only_candidate() {
        let rules = PercolationRuleSet::builtin();
        // "." would never match the NP patterns, but a single child is the
        // head by default.
        let t = tree("(NP (. .))");
        let headed = percolate_headwords(&t, &rules).unwrap();
        assert_eq!(headed.head_word(), ".");
    }

    #[test]
    fn missing_rule_is_a_hard_error() {
        let rules = PercolationRuleSet::builtin();
        let t = tree("(WEIRD (NN a) (NN b))");
        assert!(matches!(
            percolate_headwords(&t, &rules),
            Err(Error::MissingRule(_))
        ));
    }

    #[test]
    fn no_matching_child_is_percolation_failure() {
        let rules = PercolationRuleSet::parse("Z left _NN\n").unwrap();
        let t = tree("(Z (VB run) (VB hide))");
        assert!(matches!(
            percolate_headwords(&t, &rules),
            Err(Error::PercolationFailure(_))
        ));
    }

    #[test]
    fn negated_list_skips_punctuation() {
        let rules = PercolationRuleSet::builtin();
        // FRAG's only pattern is the negated punctuation list; scanning from
        // the left, the first non-punctuation child is the head.
        let t = tree("(FRAG (, ,) (NN deal) (. .))");
        let headed = percolate_headwords(&t, &rules).unwrap();
        assert_eq!(headed.head_word(), "deal");
    }

    #[test]
    fn deterministic_across_runs() {
        let rules = PercolationRuleSet::builtin();
        let t = tree("(S (NP (NNP Pierre) (NNP Vinken)) (VP (VBD ran)) (. .))");
        let a = percolate_headwords(&t, &rules).unwrap();
        let b = percolate_headwords(&t, &rules).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.head_word(), "ran");
    }
}
