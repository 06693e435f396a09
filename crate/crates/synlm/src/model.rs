//! The structured language model proper: word-parse prefix state machine,
//! the three conditional components (word predictor, tagger, parser), joint
//! probability of a sentence with its parse, and the completeness
//! constraints that make the action process halt in a complete parse.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{Descriptor, EventCounts, InterpModel};
use crate::symtab::{Sym, SymbolTable};
use crate::treebank::HeadedTree;

/// Distinguished symbols shared by every model.
#[derive(Debug, Clone, Copy)]
pub struct Specials {
    pub bos: Sym,
    pub eos: Sym,
    pub unk: Sym,
    pub pad: Sym,
    pub sb: Sym,
    pub se: Sym,
    pub top: Sym,
    pub top_prime: Sym,
}

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const PAD: &str = "<pad>";
pub const SB: &str = "SB";
pub const SE: &str = "SE";
pub const TOP: &str = "TOP";
pub const TOP_PRIME: &str = "TOP'";

impl Specials {
    pub fn intern(tab: &mut SymbolTable) -> Specials {
        Specials {
            bos: tab.intern(BOS),
            eos: tab.intern(EOS),
            unk: tab.intern(UNK),
            pad: tab.intern(PAD),
            sb: tab.intern(SB),
            se: tab.intern(SE),
            top: tab.intern(TOP),
            top_prime: tab.intern(TOP_PRIME),
        }
    }
}

/// Topmost head of a maximal completed subtree in a word-parse prefix.
/// `pos` is the sentence position of the headword (0 for `<s>`), used for
/// depth statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExposedHead {
    pub word: Sym,
    pub tag: Sym,
    pub leaf: bool,
    pub pos: u32,
}

/// One parser transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParserAction {
    Unary(Sym),
    AdjoinLeft(Sym),
    AdjoinRight(Sym),
    Null,
}

impl ParserAction {
    pub fn render(&self, tab: &SymbolTable) -> String {
        match self {
            ParserAction::Unary(nt) => format!("unary:{}", tab.name(*nt)),
            ParserAction::AdjoinLeft(nt) => format!("adjoin-left:{}", tab.name(*nt)),
            ParserAction::AdjoinRight(nt) => format!("adjoin-right:{}", tab.name(*nt)),
            ParserAction::Null => "null".to_string(),
        }
    }

    pub fn parse(name: &str, tab: &mut SymbolTable) -> Result<ParserAction> {
        if name == "null" {
            return Ok(ParserAction::Null);
        }
        let (kind, nt) = name
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad parser action `{}`", name)))?;
        let nt = tab.intern(nt);
        match kind {
            "unary" => Ok(ParserAction::Unary(nt)),
            "adjoin-left" => Ok(ParserAction::AdjoinLeft(nt)),
            "adjoin-right" => Ok(ParserAction::AdjoinRight(nt)),
            _ => Err(Error::Config(format!("bad parser action `{}`", name))),
        }
    }

    /// Parse without interning; fails if the label is not already known.
    pub fn parse_known(name: &str, tab: &SymbolTable) -> Result<ParserAction> {
        if name == "null" {
            return Ok(ParserAction::Null);
        }
        let (kind, nt) = name
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad parser action `{}`", name)))?;
        let nt = tab
            .get(nt)
            .ok_or_else(|| Error::Config(format!("action `{}` names an unknown label", name)))?;
        match kind {
            "unary" => Ok(ParserAction::Unary(nt)),
            "adjoin-left" => Ok(ParserAction::AdjoinLeft(nt)),
            "adjoin-right" => Ok(ParserAction::AdjoinRight(nt)),
            _ => Err(Error::Config(format!("bad parser action `{}`", name))),
        }
    }

    pub fn intern_name(&self, tab: &mut SymbolTable) -> Sym {
        let name = match self {
            ParserAction::Unary(nt) => format!("unary:{}", tab.name(*nt)),
            ParserAction::AdjoinLeft(nt) => format!("adjoin-left:{}", tab.name(*nt)),
            ParserAction::AdjoinRight(nt) => format!("adjoin-right:{}", tab.name(*nt)),
            ParserAction::Null => "null".to_string(),
        };
        tab.intern(&name)
    }

    pub fn is_adjoin(&self) -> bool {
        matches!(self, ParserAction::AdjoinLeft(_) | ParserAction::AdjoinRight(_))
    }
}

/// The word-parse k-prefix, reduced to what the model conditions on: the
/// stack of exposed heads plus the word position. The subtrees themselves
/// are recoverable by replaying the event history.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordParsePrefix {
    heads: Vec<ExposedHead>,
    k: u32,
}

impl WordParsePrefix {
    pub fn new(sp: &Specials) -> Self {
        WordParsePrefix {
            heads: vec![ExposedHead {
                word: sp.bos,
                tag: sp.sb,
                leaf: true,
                pos: 0,
            }],
            k: 0,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn heads(&self) -> &[ExposedHead] {
        &self.heads
    }

    pub fn h0(&self) -> &ExposedHead {
        self.heads.last().expect("prefix never empty")
    }

    /// Second most recent head; the pad head when only `<s>` is on the
    /// stack.
    pub fn h_minus_1(&self, sp: &Specials) -> ExposedHead {
        if self.heads.len() >= 2 {
            self.heads[self.heads.len() - 2]
        } else {
            ExposedHead {
                word: sp.pad,
                tag: sp.pad,
                leaf: true,
                pos: 0,
            }
        }
    }

    pub fn predictor_ctx(&self, sp: &Specials) -> [Sym; 4] {
        let h0 = self.h0();
        let h1 = self.h_minus_1(sp);
        [h0.tag, h0.word, h1.tag, h1.word]
    }

    pub fn tagger_ctx(&self, word: Sym, sp: &Specials) -> [Sym; 3] {
        let h0 = self.h0();
        let h1 = self.h_minus_1(sp);
        [word, h0.tag, h1.tag]
    }

    pub fn parser_ctx(&self, sp: &Specials) -> [Sym; 4] {
        let h0 = self.h0();
        let h1 = self.h_minus_1(sp);
        [h0.tag, h1.tag, h0.word, h1.word]
    }

    pub fn shift(&mut self, word: Sym, tag: Sym) {
        self.k += 1;
        self.heads.push(ExposedHead {
            word,
            tag,
            leaf: true,
            pos: self.k,
        });
    }

    /// A complete parse leaves a single head: the end-of-sentence word
    /// under the root label.
    pub fn is_complete(&self, sp: &Specials) -> bool {
        self.heads.len() == 1 && self.h0().tag == sp.top
    }

    pub fn apply(&mut self, action: ParserAction) -> Result<()> {
        let state = format!("{} heads at k={}", self.heads.len(), self.k);
        match action {
            ParserAction::Null => Ok(()),
            ParserAction::Unary(nt) => {
                let top = self.heads.last_mut().expect("prefix never empty");
                if !top.leaf {
                    return Err(Error::IllegalAction {
                        action: "unary on a non-leaf head".into(),
                        state,
                    });
                }
                top.tag = nt;
                top.leaf = false;
                Ok(())
            }
            ParserAction::AdjoinLeft(nt) | ParserAction::AdjoinRight(nt) => {
                if self.heads.len() < 2 {
                    return Err(Error::IllegalAction {
                        action: "adjoin with fewer than two heads".into(),
                        state,
                    });
                }
                let right = self.heads.pop().unwrap();
                let left = self.heads.pop().unwrap();
                let source = if matches!(action, ParserAction::AdjoinLeft(_)) {
                    left
                } else {
                    right
                };
                self.heads.push(ExposedHead {
                    word: source.word,
                    tag: nt,
                    leaf: false,
                    pos: source.pos,
                });
                Ok(())
            }
        }
    }
}

/// What the completeness constraints say about the next parser move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParserSituation {
    /// `h_0` is the end-of-sentence word, more than one subtree left:
    /// adjoin-right under the primed root label with probability one.
    ForcedTopPrime,
    /// `h_0 = (</s>, TOP')` and only `<s>` below it: the final adjoin.
    ForcedTop,
    /// Only `<s>` below a non-leaf head: null with probability one, so the
    /// sentence-start symbol is adjoined last.
    ForcedNull,
    /// Only `<s>` below a leaf head: unary or null.
    OpenAtBos,
    /// Deep stack, non-leaf head: adjoins or null.
    OpenNonLeaf,
    /// Deep stack, leaf head: any action.
    Open,
}

fn situation_from_parts(
    sp: &Specials,
    h0_tag: Sym,
    h0_word: Sym,
    h1_word: Sym,
    h0_leaf: bool,
) -> ParserSituation {
    if h1_word != sp.bos {
        if h0_word == sp.eos {
            ParserSituation::ForcedTopPrime
        } else if h0_leaf {
            ParserSituation::Open
        } else {
            ParserSituation::OpenNonLeaf
        }
    } else if h0_word == sp.eos && h0_tag == sp.top_prime {
        ParserSituation::ForcedTop
    } else if h0_leaf {
        ParserSituation::OpenAtBos
    } else {
        ParserSituation::ForcedNull
    }
}

impl ParserSituation {
    pub fn forced_action(&self, sp: &Specials) -> Option<ParserAction> {
        match self {
            ParserSituation::ForcedTopPrime => Some(ParserAction::AdjoinRight(sp.top_prime)),
            ParserSituation::ForcedTop => Some(ParserAction::AdjoinRight(sp.top)),
            ParserSituation::ForcedNull => Some(ParserAction::Null),
            _ => None,
        }
    }

    fn admits(&self, action: &ParserAction, sp: &Specials) -> bool {
        // The root labels belong to the constraint-forced adjoins only.
        let structural = match action {
            ParserAction::Unary(nt)
            | ParserAction::AdjoinLeft(nt)
            | ParserAction::AdjoinRight(nt) => *nt == sp.top || *nt == sp.top_prime,
            ParserAction::Null => false,
        };
        if structural {
            return false;
        }
        match self {
            ParserSituation::Open => true,
            ParserSituation::OpenNonLeaf => !matches!(action, ParserAction::Unary(_)),
            ParserSituation::OpenAtBos => {
                matches!(action, ParserAction::Unary(_) | ParserAction::Null)
            }
            _ => false,
        }
    }
}

/// Which model component took an elementary action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Predictor,
    Tagger,
    Parser,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Predictor => "PREDICTOR",
            Component::Tagger => "TAGGER",
            Component::Parser => "PARSER",
        }
    }
}

/// One elementary event `u | z`, with enough state recorded to evaluate
/// its probability without replaying the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub comp: Component,
    pub u: Sym,
    pub ctx: Vec<Sym>,
    pub forced: bool,
    pub h0_leaf: bool,
}

/// The unique sequence of elementary events encoding a sentence with a
/// complete parse.
pub type Derivation = Vec<Event>;

/// The structured language model: three deleted-interpolation components
/// over a shared symbol table, plus the cached tag and action lists
/// observed in training.
pub struct SlmModel {
    pub symtab: Arc<SymbolTable>,
    pub specials: Specials,
    pub predictor: InterpModel,
    pub tagger: InterpModel,
    pub parser: InterpModel,
    /// Separate component for left-to-right word probability assignment;
    /// absent until the second reestimation stage creates it.
    pub l2r_predictor: Option<InterpModel>,
    pub pos_tags: Vec<Sym>,
    pub nt_labels: Vec<Sym>,
    actions: Vec<(ParserAction, Sym)>,
    action_syms: HashMap<ParserAction, Sym>,
    tagger_cache: HashMap<Sym, Vec<Sym>>,
    parser_cache: HashMap<(Sym, Sym), Vec<ParserAction>>,
}

impl SlmModel {
    pub fn new(
        symtab: Arc<SymbolTable>,
        specials: Specials,
        predictor: InterpModel,
        tagger: InterpModel,
        parser: InterpModel,
        pos_tags: Vec<Sym>,
        nt_labels: Vec<Sym>,
    ) -> Result<Self> {
        let mut actions = Vec::new();
        let mut action_syms = HashMap::new();
        for &sym in parser.alphabet() {
            let action = ParserAction::parse_known(symtab.name(sym), &symtab)?;
            actions.push((action, sym));
            action_syms.insert(action, sym);
        }
        let tagger_cache = build_tagger_cache(&tagger);
        let parser_cache = build_parser_cache(&parser, &action_syms);
        Ok(SlmModel {
            symtab,
            specials,
            predictor,
            tagger,
            parser,
            l2r_predictor: None,
            pos_tags,
            nt_labels,
            actions,
            action_syms,
            tagger_cache,
            parser_cache,
        })
    }

    /// Rebuild the derived caches after swapping component counts.
    pub fn refresh_caches(&mut self) {
        self.tagger_cache = build_tagger_cache(&self.tagger);
        self.parser_cache = build_parser_cache(&self.parser, &self.action_syms);
    }

    pub fn actions(&self) -> &[(ParserAction, Sym)] {
        &self.actions
    }

    pub fn action_sym(&self, action: ParserAction) -> Option<Sym> {
        self.action_syms.get(&action).copied()
    }

    /// Map a surface token to the word vocabulary, falling back to `<unk>`.
    pub fn word_sym(&self, token: &str) -> Sym {
        match self.symtab.get(token) {
            Some(s) if self.predictor.contains(s) => s,
            _ => self.specials.unk,
        }
    }

    /// P(w | h_0, h_{-1}) under the structure predictor.
    pub fn predictor_prob(&self, prefix: &WordParsePrefix, word: Sym) -> Result<f64> {
        self.predictor.prob(word, &prefix.predictor_ctx(&self.specials))
    }

    /// Same context, but through the separate left-to-right word predictor
    /// when one has been trained.
    pub fn l2r_word_prob(&self, prefix: &WordParsePrefix, word: Sym) -> Result<f64> {
        match &self.l2r_predictor {
            Some(m) => m.prob(word, &prefix.predictor_ctx(&self.specials)),
            None => self.predictor_prob(prefix, word),
        }
    }

    /// P(t | w, h_0.tag, h_{-1}.tag).
    pub fn tagger_prob(&self, prefix: &WordParsePrefix, word: Sym, tag: Sym) -> Result<f64> {
        self.tagger.prob(tag, &prefix.tagger_ctx(word, &self.specials))
    }

    pub fn situation(&self, prefix: &WordParsePrefix) -> ParserSituation {
        let h0 = prefix.h0();
        let h1 = prefix.h_minus_1(&self.specials);
        situation_from_parts(&self.specials, h0.tag, h0.word, h1.word, h0.leaf)
    }

    fn situation_of_event(&self, ev: &Event) -> ParserSituation {
        situation_from_parts(&self.specials, ev.ctx[0], ev.ctx[2], ev.ctx[3], ev.h0_leaf)
    }

    /// Exactly the actions the operation algorithm permits in this state.
    /// Constraint-forced states return the single forced action.
    pub fn legal_actions(&self, prefix: &WordParsePrefix) -> Vec<ParserAction> {
        let sit = self.situation(prefix);
        if let Some(forced) = sit.forced_action(&self.specials) {
            return vec![forced];
        }
        self.actions
            .iter()
            .filter(|(a, _)| sit.admits(a, &self.specials))
            .map(|(a, _)| *a)
            .collect()
    }

    /// Cached POS tags for a word as observed in training; unseen words get
    /// the full closed tag set.
    pub fn tagger_cache_lookup(&self, word: Sym) -> &[Sym] {
        match self.tagger_cache.get(&word) {
            Some(tags) => tags,
            None => &self.pos_tags,
        }
    }

    /// Cached parser actions for an exposed tag pair; `None` means the pair
    /// was never seen and the hypothesis is discarded under hard pruning.
    pub fn parser_cache_lookup(&self, h0_tag: Sym, h1_tag: Sym) -> Option<&[ParserAction]> {
        self.parser_cache.get(&(h0_tag, h1_tag)).map(|v| v.as_slice())
    }

    fn parser_prob_parts(
        &self,
        sit: ParserSituation,
        ctx: &[Sym],
        action: ParserAction,
    ) -> Result<f64> {
        if let Some(forced) = sit.forced_action(&self.specials) {
            return Ok(if action == forced { 1.0 } else { 0.0 });
        }
        let sym = match self.action_syms.get(&action) {
            Some(&s) => s,
            None => return Ok(0.0),
        };
        let raw = self.parser.prob(sym, ctx)?;
        let mut norm = 0.0;
        let mut admits_all = true;
        for (a, s) in &self.actions {
            if sit.admits(a, &self.specials) {
                norm += self.parser.prob(*s, ctx)?;
            } else {
                admits_all = false;
            }
        }
        if !sit.admits(&action, &self.specials) || norm == 0.0 {
            return Ok(0.0);
        }
        // When the whole alphabet is admissible the component already
        // sums to one; skip the division to keep raw values bit-exact.
        if admits_all {
            return Ok(raw);
        }
        Ok(raw / norm)
    }

    /// Probability of a parser action, renormalized over the actions legal
    /// in the current state; forced states put all mass on the forced move.
    pub fn parser_prob(&self, prefix: &WordParsePrefix, action: ParserAction) -> Result<f64> {
        let sit = self.situation(prefix);
        let ctx = prefix.parser_ctx(&self.specials);
        self.parser_prob_parts(sit, &ctx, action)
    }

    /// Log-probability of one elementary event. Constraint-forced events
    /// contribute zero.
    pub fn event_logprob(&self, ev: &Event) -> Result<f64> {
        match ev.comp {
            Component::Predictor => Ok(self.predictor.prob(ev.u, &ev.ctx)?.ln()),
            Component::Tagger => {
                if ev.forced {
                    return Ok(0.0);
                }
                Ok(self.tagger.prob(ev.u, &ev.ctx)?.ln())
            }
            Component::Parser => {
                if ev.forced {
                    return Ok(0.0);
                }
                let sit = self.situation_of_event(ev);
                let action = self.action_of_sym(ev.u)?;
                Ok(self.parser_prob_parts(sit, &ev.ctx, action)?.ln())
            }
        }
    }

    fn action_of_sym(&self, sym: Sym) -> Result<ParserAction> {
        self.actions
            .iter()
            .find(|(_, s)| *s == sym)
            .map(|(a, _)| *a)
            .ok_or_else(|| Error::Config(format!("unknown action symbol {}", sym)))
    }

    /// ln P(W,T): the sum of component log-probabilities over a derivation.
    pub fn joint_logprob(&self, derivation: &[Event]) -> Result<f64> {
        let mut total = 0.0;
        for ev in derivation {
            total += self.event_logprob(ev)?;
        }
        Ok(total)
    }
}

fn build_tagger_cache(tagger: &InterpModel) -> HashMap<Sym, Vec<Sym>> {
    // Tagger context is (w, h0.tag, h-1.tag); the order-1 marginal pairs
    // each tag with the word it was assigned to.
    let mut cache: HashMap<Sym, Vec<Sym>> = HashMap::new();
    for (t, ctx, w) in tagger.dev_counts().iter() {
        if w > 0.0 {
            cache.entry(ctx[0]).or_default().push(t);
        }
    }
    for tags in cache.values_mut() {
        tags.sort_unstable();
        tags.dedup();
    }
    cache
}

fn build_parser_cache(
    parser: &InterpModel,
    action_syms: &HashMap<ParserAction, Sym>,
) -> HashMap<(Sym, Sym), Vec<ParserAction>> {
    let rev: HashMap<Sym, ParserAction> = action_syms.iter().map(|(a, s)| (*s, *a)).collect();
    let mut cache: HashMap<(Sym, Sym), Vec<ParserAction>> = HashMap::new();
    for (u, ctx, w) in parser.dev_counts().iter() {
        if w > 0.0 {
            if let Some(action) = rev.get(&u) {
                cache.entry((ctx[0], ctx[1])).or_default().push(*action);
            }
        }
    }
    for actions in cache.values_mut() {
        actions.sort_unstable_by_key(|a| format!("{:?}", a));
        actions.dedup();
    }
    cache
}

/// Walks a forest of binarized subtrees and emits the unique derivation
/// that generates the sentence with exactly that structure, including the
/// end-of-sentence events and the forced final adjoins.
pub fn derivation_of_forest(
    forest: &[HeadedTree],
    tab: &mut SymbolTable,
    sp: &Specials,
) -> Result<Derivation> {
    let mut events = Vec::new();
    let mut prefix = WordParsePrefix::new(sp);
    let mut first = true;
    for tree in forest {
        emit_tree(tree, tab, sp, &mut prefix, &mut events, &mut first)?;
    }
    if first {
        return Err(Error::EmptySentence);
    }
    // Close the parser cycle at the last word, predict </s> and run the
    // constraint-forced adjoins to completion.
    emit_parser(&mut prefix, sp, ParserAction::Null, &mut events, tab)?;
    emit_predict_and_tag(&mut prefix, sp, tab.intern(EOS), tab.intern(SE), &mut events);
    loop {
        let h0 = *prefix.h0();
        let h1 = prefix.h_minus_1(sp);
        let sit = situation_from_parts(sp, h0.tag, h0.word, h1.word, h0.leaf);
        match sit.forced_action(sp) {
            Some(action @ ParserAction::AdjoinRight(_)) => {
                emit_parser(&mut prefix, sp, action, &mut events, tab)?;
            }
            _ => {
                return Err(Error::InvalidParse(
                    "end-of-sentence state does not force the final adjoins".into(),
                ))
            }
        }
        if prefix.heads().len() == 1 {
            break;
        }
    }
    if !prefix.is_complete(sp) {
        return Err(Error::InvalidParse(
            "derivation did not end in a complete parse".into(),
        ));
    }
    Ok(events)
}

/// Derivation of a single treebank constituent spanning the sentence.
pub fn derivation_of_tree(
    tree: &HeadedTree,
    tab: &mut SymbolTable,
    sp: &Specials,
) -> Result<Derivation> {
    derivation_of_forest(std::slice::from_ref(tree), tab, sp)
}

fn emit_predict_and_tag(
    prefix: &mut WordParsePrefix,
    sp: &Specials,
    word: Sym,
    tag: Sym,
    events: &mut Vec<Event>,
) {
    events.push(Event {
        comp: Component::Predictor,
        u: word,
        ctx: prefix.predictor_ctx(sp).to_vec(),
        forced: false,
        h0_leaf: false,
    });
    // The end-of-sentence symbol carries its distinguished tag by
    // definition, not by the tagger's choice.
    events.push(Event {
        comp: Component::Tagger,
        u: tag,
        ctx: prefix.tagger_ctx(word, sp).to_vec(),
        forced: word == sp.eos,
        h0_leaf: false,
    });
    prefix.shift(word, tag);
}

fn emit_parser(
    prefix: &mut WordParsePrefix,
    sp: &Specials,
    action: ParserAction,
    events: &mut Vec<Event>,
    tab: &mut SymbolTable,
) -> Result<()> {
    let h0 = *prefix.h0();
    let h1 = prefix.h_minus_1(sp);
    let sit = situation_from_parts(sp, h0.tag, h0.word, h1.word, h0.leaf);
    let forced = match sit.forced_action(sp) {
        Some(f) => {
            if f != action {
                return Err(Error::InvalidParse(format!(
                    "tree requires action where the constraints force another ({:?})",
                    sit
                )));
            }
            true
        }
        None => {
            if !sit.admits(&action, sp) {
                return Err(Error::InvalidParse(format!(
                    "action not admissible in state {:?}",
                    sit
                )));
            }
            false
        }
    };
    events.push(Event {
        comp: Component::Parser,
        u: action.intern_name(tab),
        ctx: prefix.parser_ctx(sp).to_vec(),
        forced,
        h0_leaf: h0.leaf,
    });
    prefix.apply(action)?;
    Ok(())
}

fn emit_tree(
    tree: &HeadedTree,
    tab: &mut SymbolTable,
    sp: &Specials,
    prefix: &mut WordParsePrefix,
    events: &mut Vec<Event>,
    first: &mut bool,
) -> Result<()> {
    match tree {
        HeadedTree::Leaf { tag, word } => {
            if word == BOS || word == EOS {
                return Err(Error::InvalidParse(format!(
                    "sentence word `{}` collides with a boundary symbol",
                    word
                )));
            }
            if !*first {
                emit_parser(prefix, sp, ParserAction::Null, events, tab)?;
            }
            *first = false;
            emit_predict_and_tag(prefix, sp, tab.intern(word), tab.intern(tag), events);
            Ok(())
        }
        HeadedTree::Unary { label, child } => {
            emit_tree(child, tab, sp, prefix, events, first)?;
            let action = ParserAction::Unary(tab.intern(label));
            emit_parser(prefix, sp, action, events, tab)
        }
        HeadedTree::Binary {
            label,
            head_from_right,
            left,
            right,
        } => {
            emit_tree(left, tab, sp, prefix, events, first)?;
            emit_tree(right, tab, sp, prefix, events, first)?;
            let nt = tab.intern(label);
            let action = if *head_from_right {
                ParserAction::AdjoinRight(nt)
            } else {
                ParserAction::AdjoinLeft(nt)
            };
            emit_parser(prefix, sp, action, events, tab)
        }
    }
}

/// Rebuild the complete parse tree from a derivation.
pub fn replay(derivation: &[Event], tab: &SymbolTable) -> Result<HeadedTree> {
    let mut stack: Vec<HeadedTree> = vec![HeadedTree::Leaf {
        tag: SB.to_string(),
        word: BOS.to_string(),
    }];
    let mut pending_word: Option<Sym> = None;
    for ev in derivation {
        match ev.comp {
            Component::Predictor => pending_word = Some(ev.u),
            Component::Tagger => {
                let word = pending_word.take().ok_or_else(|| {
                    Error::InvalidParse("tagger event without a predicted word".into())
                })?;
                stack.push(HeadedTree::Leaf {
                    tag: tab.name(ev.u).to_string(),
                    word: tab.name(word).to_string(),
                });
            }
            Component::Parser => {
                let name = tab.name(ev.u);
                if name == "null" {
                    continue;
                }
                let (kind, nt) = name.split_once(':').ok_or_else(|| {
                    Error::InvalidParse(format!("bad action `{}` in derivation", name))
                })?;
                match kind {
                    "unary" => {
                        let child = stack.pop().ok_or_else(short_stack)?;
                        stack.push(HeadedTree::Unary {
                            label: nt.to_string(),
                            child: Box::new(child),
                        });
                    }
                    "adjoin-left" | "adjoin-right" => {
                        let right = stack.pop().ok_or_else(short_stack)?;
                        let left = stack.pop().ok_or_else(short_stack)?;
                        stack.push(HeadedTree::Binary {
                            label: nt.to_string(),
                            head_from_right: kind == "adjoin-right",
                            left: Box::new(left),
                            right: Box::new(right),
                        });
                    }
                    _ => {
                        return Err(Error::InvalidParse(format!(
                            "bad action `{}` in derivation",
                            name
                        )))
                    }
                }
            }
        }
    }
    if stack.len() != 1 {
        return Err(Error::InvalidParse(format!(
            "replay left {} subtrees on the stack",
            stack.len()
        )));
    }
    Ok(stack.pop().unwrap())
}

fn short_stack() -> Error {
    Error::InvalidParse("parser action on a too-short stack".into())
}

/// Peel the root and the end-of-sentence spine off a complete parse,
/// returning the sentence-level subtrees left to right.
pub fn complete_parse_forest(tree: &HeadedTree) -> Result<Vec<HeadedTree>> {
    let (left, mut node) = match tree {
        HeadedTree::Binary { label, left, right, .. } if label == TOP => (left, right.as_ref()),
        _ => return Err(Error::InvalidParse("complete parse must be rooted in TOP".into())),
    };
    match left.as_ref() {
        HeadedTree::Leaf { word, .. } if word == BOS => {}
        _ => return Err(Error::InvalidParse("root must adjoin the start symbol".into())),
    }
    let mut forest = Vec::new();
    loop {
        match node {
            HeadedTree::Binary { label, left, right, .. } if label == TOP_PRIME => {
                forest.push(left.as_ref().clone());
                node = right.as_ref();
            }
            HeadedTree::Leaf { word, .. } if word == EOS => break,
            _ => {
                return Err(Error::InvalidParse(
                    "end-of-sentence spine is not a chain of primed-root adjoins".into(),
                ))
            }
        }
    }
    Ok(forest)
}

/// Serialize a derivation, one event per line:
/// `component TAB action TAB z1 TAB z2 ...`.
pub fn derivation_to_text(derivation: &[Event], tab: &SymbolTable) -> String {
    let mut out = String::new();
    for ev in derivation {
        out.push_str(ev.comp.as_str());
        out.push('\t');
        out.push_str(tab.name(ev.u));
        for &z in &ev.ctx {
            out.push('\t');
            out.push_str(tab.name(z));
        }
        out.push('\n');
    }
    out
}

/// Persist an SLM as three descriptor files, three count files and the
/// vocabulary files, all under one directory.
pub fn save_model(model: &SlmModel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tab = &model.symtab;
    let comps: Vec<(&str, &InterpModel)> = {
        let mut v = vec![
            ("predictor", &model.predictor),
            ("tagger", &model.tagger),
            ("parser", &model.parser),
        ];
        if let Some(l2r) = &model.l2r_predictor {
            v.push(("l2r_predictor", l2r));
        }
        v
    };
    for (name, comp) in comps {
        let counts_file = format!("{}.counts", name);
        let desc = Descriptor {
            main_counts_file: counts_file.clone(),
            held_counts_file: "-".to_string(),
            max_order: comp.max_order(),
            no_iterations: 0,
            lambdas: comp.lambdas().clone(),
        };
        std::fs::write(dir.join(format!("{}.desc", name)), desc.to_text())?;
        std::fs::write(dir.join(&counts_file), comp.dev_counts().to_text(tab))?;
    }
    let write_vocab = |file: &str, syms: &[Sym]| -> Result<()> {
        let mut out = String::new();
        for &s in syms {
            out.push_str(tab.name(s));
            out.push('\n');
        }
        std::fs::write(dir.join(file), out)?;
        Ok(())
    };
    write_vocab("words.vocab", model.predictor.alphabet())?;
    write_vocab("pos.vocab", &model.pos_tags)?;
    write_vocab("nt.vocab", &model.nt_labels)?;
    write_vocab("actions.vocab", model.parser.alphabet())?;
    Ok(())
}

fn load_component(
    dir: &Path,
    name: &str,
    alphabet: Vec<Sym>,
    tab: &mut SymbolTable,
) -> Result<(Descriptor, EventCounts, Vec<Sym>)> {
    let desc = Descriptor::from_text(&std::fs::read_to_string(dir.join(format!("{}.desc", name)))?)?;
    let counts_text = std::fs::read_to_string(dir.join(&desc.main_counts_file))?;
    let counts = EventCounts::from_text(&counts_text, desc.max_order, tab)?;
    Ok((desc, counts, alphabet))
}

/// Load a model directory written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<SlmModel> {
    let mut tab = SymbolTable::new();
    let specials = Specials::intern(&mut tab);
    let read_vocab = |file: &str, tab: &mut SymbolTable| -> Result<Vec<Sym>> {
        let text = std::fs::read_to_string(dir.join(file))?;
        Ok(text.lines().filter(|l| !l.is_empty()).map(|l| tab.intern(l)).collect())
    };
    let words = read_vocab("words.vocab", &mut tab)?;
    let pos_tags = read_vocab("pos.vocab", &mut tab)?;
    let nt_labels = read_vocab("nt.vocab", &mut tab)?;
    let action_alphabet = read_vocab("actions.vocab", &mut tab)?;
    // Make sure the action strings decompose over interned labels.
    for &a in &action_alphabet {
        let name = tab.name(a).to_string();
        ParserAction::parse(&name, &mut tab)?;
    }
    let (pd, pc, palpha) = load_component(dir, "predictor", words, &mut tab)?;
    let (td, tc, talpha) = load_component(dir, "tagger", pos_tags.clone(), &mut tab)?;
    let (rd, rc, ralpha) = load_component(dir, "parser", action_alphabet, &mut tab)?;
    let l2r = if dir.join("l2r_predictor.desc").exists() {
        Some(load_component(dir, "l2r_predictor", palpha.clone(), &mut tab)?)
    } else {
        None
    };
    let tab = Arc::new(tab);
    let predictor = InterpModel::new(Arc::clone(&tab), palpha, pc, pd.lambdas)?;
    let tagger = InterpModel::new(Arc::clone(&tab), talpha, tc, td.lambdas)?;
    let parser = InterpModel::new(Arc::clone(&tab), ralpha, rc, rd.lambdas)?;
    let mut model = SlmModel::new(
        Arc::clone(&tab),
        specials,
        predictor,
        tagger,
        parser,
        pos_tags,
        nt_labels,
    )?;
    if let Some((ld, lc, la)) = l2r {
        model.l2r_predictor = Some(InterpModel::new(Arc::clone(&tab), la, lc, ld.lambdas)?);
    }
    Ok(model)
}
