//! Bracketed treebank trees: parsing, cleanup, headword percolation,
//! binarization and the annotated output format.

mod binarize;
mod rules;

pub use binarize::{binarize, BinarizationRuleSet, Scheme};
pub use rules::{percolate_headwords, Pattern, PercolationRuleSet, RuleEntry, ScanDirection};

use crate::error::{Error, Result};

/// Raw n-ary tree as read from bracket notation. A node has a word iff it
/// has no children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTree {
    pub label: String,
    pub children: Vec<RawTree>,
    pub word: Option<String>,
}

impl RawTree {
    pub fn leaf(label: &str, word: &str) -> Self {
        RawTree {
            label: label.to_string(),
            children: Vec::new(),
            word: Some(word.to_string()),
        }
    }

    pub fn node(label: &str, children: Vec<RawTree>) -> Self {
        RawTree {
            label: label.to_string(),
            children,
            word: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.word.is_some()
    }

    pub fn render(&self) -> String {
        match &self.word {
            Some(w) => format!("({} {})", self.label, w),
            None => {
                let kids: Vec<String> = self.children.iter().map(|c| c.render()).collect();
                format!("({} {})", self.label, kids.join(" "))
            }
        }
    }

    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.word {
            Some(w) => out.push(w),
            None => {
                for c in &self.children {
                    c.collect_words(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(usize),
    Close(usize),
    Atom(usize, String),
}

fn lex(text: &str) -> Vec<Token> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                toks.push(Token::Open(i));
                i += 1;
            }
            b')' => {
                toks.push(Token::Close(i));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                toks.push(Token::Atom(start, text[start..i].to_string()));
            }
        }
    }
    toks
}

/// Reduce a node label to its base form: functional annotations after the
/// first `-` or `=` are dropped (`NP-SBJ` becomes `NP`). Labels that start
/// with `-` are markers, not annotated labels; the bracket tags are mapped
/// to the names the rule tables use and `-NONE-` is kept for trace removal.
fn strip_label(label: &str) -> String {
    if label.starts_with('-') {
        return match label {
            "-LRB-" => "LRB".to_string(),
            "-RRB-" => "RRB".to_string(),
            other => other.to_string(),
        };
    }
    let cut = label
        .find(|c| c == '-' || c == '=')
        .unwrap_or(label.len());
    label[..cut].to_string()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, offset: usize, msg: &str) -> Error {
        Error::TreeParse {
            offset,
            msg: msg.to_string(),
        }
    }

    /// One parenthesized form. Label-less wrappers like the outer parens of
    /// a treebank sentence unwrap to their single tree child.
    fn form(&mut self) -> Result<RawTree> {
        let open = match self.bump() {
            Some(Token::Open(p)) => p,
            Some(Token::Close(p)) => return Err(self.err(p, "unexpected `)`")),
            Some(Token::Atom(p, _)) => return Err(self.err(p, "expected `(`")),
            None => return Err(self.err(self.end, "expected `(`")),
        };
        let label = match self.peek() {
            Some(Token::Atom(_, _)) => match self.bump() {
                Some(Token::Atom(_, s)) => Some(s),
                _ => unreachable!(),
            },
            _ => None,
        };
        let mut subtrees = Vec::new();
        let mut words: Vec<String> = Vec::new();
        loop {
            match self.peek() {
                Some(Token::Close(_)) => {
                    self.bump();
                    break;
                }
                Some(Token::Open(_)) => subtrees.push(self.form()?),
                Some(Token::Atom(_, _)) => {
                    if let Some(Token::Atom(_, w)) = self.bump() {
                        words.push(w);
                    }
                }
                None => return Err(self.err(self.end, "unbalanced parentheses")),
            }
        }
        match label {
            None => {
                // Wrapper parens: exactly one tree inside.
                if subtrees.len() == 1 && words.is_empty() {
                    Ok(subtrees.into_iter().next().unwrap())
                } else {
                    Err(self.err(open, "parenthesized group without a label"))
                }
            }
            Some(label) => {
                if subtrees.is_empty() && words.len() == 1 {
                    Ok(RawTree::leaf(&label, &words[0]))
                } else if words.is_empty() && !subtrees.is_empty() {
                    Ok(RawTree {
                        label,
                        children: subtrees,
                        word: None,
                    })
                } else if subtrees.is_empty() && words.is_empty() {
                    Err(self.err(open, "empty constituent"))
                } else {
                    Err(self.err(open, "leaf without a POS tag over it"))
                }
            }
        }
    }
}

fn strip_and_prune(tree: RawTree) -> Option<RawTree> {
    let label = strip_label(&tree.label);
    if tree.is_leaf() {
        if label == "-NONE-" {
            return None;
        }
        return Some(RawTree {
            label,
            children: Vec::new(),
            word: tree.word,
        });
    }
    let children: Vec<RawTree> = tree
        .children
        .into_iter()
        .filter_map(strip_and_prune)
        .collect();
    if children.is_empty() {
        // Trace removal emptied the yield; drop the constituent too.
        return None;
    }
    Some(RawTree {
        label,
        children,
        word: None,
    })
}

/// Parse one or more bracketed trees. Functional tags are stripped and
/// `-NONE-` trace subtrees (with any constituents they empty) are removed.
pub fn parse_bracketed(text: &str) -> Result<Vec<RawTree>> {
    let toks = lex(text);
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let mut out = Vec::new();
    while p.peek().is_some() {
        let tree = p.form()?;
        if let Some(clean) = strip_and_prune(tree) {
            out.push(clean);
        }
    }
    Ok(out)
}

/// Remove unary productions whose child is itself a constituent, keeping
/// the parent label: `(Z (Y (.) (.)))` becomes `(Z (.) (.))`. Unaries over
/// a POS leaf are the only ones the model allows and are left alone.
pub fn splice_unary_chains(tree: RawTree) -> RawTree {
    if tree.is_leaf() {
        return tree;
    }
    let mut children: Vec<RawTree> = tree.children.into_iter().map(splice_unary_chains).collect();
    while children.len() == 1 && !children[0].is_leaf() {
        children = std::mem::take(&mut children[0].children);
    }
    RawTree {
        label: tree.label,
        children,
        word: None,
    }
}

/// N-ary tree annotated with head positions, the intermediate product
/// between percolation and binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadedNary {
    pub label: String,
    pub head_child: usize,
    pub children: Vec<HeadedNary>,
    pub word: Option<String>,
}

impl HeadedNary {
    pub fn head_word(&self) -> &str {
        match &self.word {
            Some(w) => w,
            None => self.children[self.head_child].head_word(),
        }
    }

    pub fn head_pos(&self) -> &str {
        match &self.word {
            Some(_) => &self.label,
            None => self.children[self.head_child].head_pos(),
        }
    }
}

/// Binarized, head-annotated constituent tree. Internal nodes have exactly
/// two children except unary nodes over a POS leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadedTree {
    Leaf {
        tag: String,
        word: String,
    },
    Unary {
        label: String,
        child: Box<HeadedTree>,
    },
    Binary {
        label: String,
        /// Head origin bit: false when the head comes from the left child.
        head_from_right: bool,
        left: Box<HeadedTree>,
        right: Box<HeadedTree>,
    },
}

impl HeadedTree {
    pub fn label(&self) -> &str {
        match self {
            HeadedTree::Leaf { tag, .. } => tag,
            HeadedTree::Unary { label, .. } => label,
            HeadedTree::Binary { label, .. } => label,
        }
    }

    pub fn head_word(&self) -> &str {
        match self {
            HeadedTree::Leaf { word, .. } => word,
            HeadedTree::Unary { child, .. } => child.head_word(),
            HeadedTree::Binary {
                head_from_right,
                left,
                right,
                ..
            } => {
                if *head_from_right {
                    right.head_word()
                } else {
                    left.head_word()
                }
            }
        }
    }

    pub fn head_pos(&self) -> &str {
        match self {
            HeadedTree::Leaf { tag, .. } => tag,
            HeadedTree::Unary { child, .. } => child.head_pos(),
            HeadedTree::Binary {
                head_from_right,
                left,
                right,
                ..
            } => {
                if *head_from_right {
                    right.head_pos()
                } else {
                    left.head_pos()
                }
            }
        }
    }

    /// Leaf (tag, word) pairs left to right.
    pub fn leaves(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            HeadedTree::Leaf { tag, word } => out.push((tag, word)),
            HeadedTree::Unary { child, .. } => child.collect_leaves(out),
            HeadedTree::Binary { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn words(&self) -> Vec<&str> {
        self.leaves().into_iter().map(|(_, w)| w).collect()
    }

    /// Bracket format with `label~headword~headpos~bit` annotation on
    /// internal nodes.
    pub fn render(&self) -> String {
        match self {
            HeadedTree::Leaf { tag, word } => format!("({} {})", tag, word),
            HeadedTree::Unary { label, child } => format!(
                "({}~{}~{}~0 {})",
                label,
                self.head_word(),
                self.head_pos(),
                child.render()
            ),
            HeadedTree::Binary {
                label,
                head_from_right,
                left,
                right,
            } => format!(
                "({}~{}~{}~{} {} {})",
                label,
                self.head_word(),
                self.head_pos(),
                u8::from(*head_from_right),
                left.render(),
                right.render()
            ),
        }
    }
}

fn annotated_node(tree: &RawTree) -> Result<HeadedTree> {
    if let Some(word) = &tree.word {
        return Ok(HeadedTree::Leaf {
            tag: tree.label.clone(),
            word: word.clone(),
        });
    }
    // label~headword~headpos~bit
    let mut tail = tree.label.rsplitn(3, '~');
    let bit = tail.next().unwrap_or("");
    let pos = tail.next();
    let rest = tail.next();
    let (label, head_word, head_pos, from_right) = match (rest, pos, bit) {
        (Some(rest), Some(pos), bit @ ("0" | "1")) => {
            let (label, hw) = rest.split_once('~').ok_or_else(|| {
                Error::MalformedNode(format!("bad annotation `{}`", tree.label))
            })?;
            (label.to_string(), hw.to_string(), pos.to_string(), bit == "1")
        }
        _ => {
            return Err(Error::MalformedNode(format!(
                "internal node `{}` lacks head annotation",
                tree.label
            )))
        }
    };
    let node = match tree.children.len() {
        1 => HeadedTree::Unary {
            label,
            child: Box::new(annotated_node(&tree.children[0])?),
        },
        2 => HeadedTree::Binary {
            label,
            head_from_right: from_right,
            left: Box::new(annotated_node(&tree.children[0])?),
            right: Box::new(annotated_node(&tree.children[1])?),
        },
        n => {
            return Err(Error::MalformedNode(format!(
                "annotated node with {} children",
                n
            )))
        }
    };
    if node.head_word() != head_word || node.head_pos() != head_pos {
        return Err(Error::MalformedNode(format!(
            "annotation `{}~{}` disagrees with percolated head `{}~{}`",
            head_word,
            head_pos,
            node.head_word(),
            node.head_pos()
        )));
    }
    Ok(node)
}

/// Read trees in the annotated bracket format produced by
/// [`HeadedTree::render`].
pub fn parse_annotated(text: &str) -> Result<Vec<HeadedTree>> {
    let toks = lex(text);
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let mut out = Vec::new();
    while p.peek().is_some() {
        let raw = p.form()?;
        out.push(annotated_node(&raw)?);
    }
    Ok(out)
}

/// Full preprocessing for one raw tree: unary splicing, percolation and
/// binarization.
pub fn preprocess(
    tree: RawTree,
    head_rules: &PercolationRuleSet,
    bin_rules: &BinarizationRuleSet,
) -> Result<HeadedTree> {
    let spliced = splice_unary_chains(tree);
    let headed = percolate_headwords(&spliced, head_rules)?;
    binarize(&headed, bin_rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_leaf_chain() {
        let trees = parse_bracketed("(X (Y w))").unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].label, "X");
        assert_eq!(trees[0].children[0], RawTree::leaf("Y", "w"));
    }

    #[test]
    fn unbalanced_input_reports_offset() {
        match parse_bracketed("(X (Y w)") {
            Err(Error::TreeParse { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn stray_close_reports_offset() {
        match parse_bracketed("(X (Y w)))") {
            Err(Error::TreeParse { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn leaf_without_pos_is_malformed() {
        assert!(parse_bracketed("(X (Y w) z)").is_err());
    }

    #[test]
    fn outer_wrapper_unwraps() {
        let text = "( (S (NP (NNP Pierre) (NNP Vinken)) (VP (VBD ran))))";
        let trees = parse_bracketed(text).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].label, "S");
        assert_eq!(trees[0].words(), vec!["Pierre", "Vinken", "ran"]);
    }

    #[test]
    fn functional_tags_are_stripped() {
        let trees = parse_bracketed("(NP-TMP (NNP Nov.) (CD 29))").unwrap();
        assert_eq!(trees[0].label, "NP");
        let trees = parse_bracketed("(NP=2 (NN x))").unwrap();
        assert_eq!(trees[0].label, "NP");
    }

    #[test]
    fn traces_and_emptied_constituents_are_removed() {
        let text = "(S (NP-SBJ (-NONE- *T*)) (VP (VBD ran)))";
        let trees = parse_bracketed(text).unwrap();
        assert_eq!(trees[0].children.len(), 1);
        assert_eq!(trees[0].children[0].label, "VP");
    }

    #[test]
    fn round_trip_up_to_whitespace() {
        let text = "( (S (NP (DT the) (NN cat))\n (VP (VBD sat))) )";
        let trees = parse_bracketed(text).unwrap();
        let rendered = trees[0].render();
        let reparsed = parse_bracketed(&rendered).unwrap();
        assert_eq!(trees, reparsed);
    }

    #[test]
    fn splice_removes_nt_over_nt() {
        let trees = parse_bracketed("(Z (Y (A a) (B b)))").unwrap();
        let spliced = splice_unary_chains(trees.into_iter().next().unwrap());
        assert_eq!(spliced.label, "Z");
        assert_eq!(spliced.children.len(), 2);
        // POS-over-word unaries stay.
        let trees = parse_bracketed("(Z (A a))").unwrap();
        let spliced = splice_unary_chains(trees.into_iter().next().unwrap());
        assert_eq!(spliced.children.len(), 1);
    }

    #[test]
    fn splice_collapses_chains() {
        let trees = parse_bracketed("(X (Y (Z (A a) (B b))))").unwrap();
        let spliced = splice_unary_chains(trees.into_iter().next().unwrap());
        assert_eq!(spliced.label, "X");
        assert_eq!(spliced.children.len(), 2);
    }

    #[test]
    fn annotated_round_trip() {
        let t = HeadedTree::Binary {
            label: "S".into(),
            head_from_right: true,
            left: Box::new(HeadedTree::Unary {
                label: "NP".into(),
                child: Box::new(HeadedTree::Leaf {
                    tag: "NN".into(),
                    word: "dogs".into(),
                }),
            }),
            right: Box::new(HeadedTree::Leaf {
                tag: "VBP".into(),
                word: "run".into(),
            }),
        };
        let text = t.render();
        assert_eq!(text, "(S~run~VBP~1 (NP~dogs~NN~0 (NN dogs)) (VBP run))");
        let back = parse_annotated(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], t);
        assert_eq!(back[0].render(), text);
    }

    #[test]
    fn annotated_head_mismatch_rejected() {
        let text = "(S~dogs~NN~1 (NP~dogs~NN~0 (NN dogs)) (VBP run))";
        assert!(parse_annotated(text).is_err());
    }
}
