//! Synchronous multi-stack pruned search over word-parse prefixes.
//!
//! Hypotheses with the same number of word-predictor and the same number of
//! adjoin operations share one bounded stack. Scanning a word runs the
//! predictor/tagger extension, then the parser extension in two steps: all
//! non-null transitions cascade downward within the stack vector, then the
//! null transition moves the survivors to the next vector, after which the
//! second pruning step applies a relative threshold against the global best.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::model::{Component, Event, ParserAction, SlmModel, WordParsePrefix};
use crate::symtab::Sym;

/// Search-control knobs. `fudge` exponentiates the tagger and parser
/// factors inside hypothesis scores; word-level probability assignment is
/// unaffected because the mixture weights renormalize.
#[derive(Debug, Clone)]
pub struct SearchParams {
    pub max_stack_depth: usize,
    pub stack_logp_threshold: f64,
    pub rel_threshold: f64,
    pub caches_enabled: bool,
    pub merge_duplicates: bool,
    pub fudge: f64,
    pub single_root: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            max_stack_depth: 10,
            stack_logp_threshold: 100.0,
            rel_threshold: 100.0,
            caches_enabled: true,
            merge_duplicates: false,
            fudge: 1.0,
            single_root: false,
        }
    }
}

impl SearchParams {
    /// Effectively exhaustive search for tiny test instances.
    pub fn unpruned() -> Self {
        SearchParams {
            max_stack_depth: usize::MAX / 2,
            stack_logp_threshold: f64::INFINITY,
            rel_threshold: f64::INFINITY,
            caches_enabled: false,
            merge_duplicates: false,
            fudge: 1.0,
            single_root: false,
        }
    }
}

#[derive(Debug)]
pub struct HistNode {
    pub event: Event,
    pub prev: Option<Rc<HistNode>>,
}

/// A partial parse: prefix state, accumulated (possibly fudged) score and
/// the event history that produced it.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub prefix: WordParsePrefix,
    pub logp: f64,
    pub n_predictor_ops: u32,
    pub n_parser_ops: u32,
    history: Option<Rc<HistNode>>,
    seq: u64,
}

impl Hypothesis {
    /// Event sequence from the start of the sentence.
    pub fn events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        let mut node = self.history.as_ref();
        while let Some(h) = node {
            out.push(h.event.clone());
            node = h.prev.as_ref();
        }
        out.reverse();
        out
    }

    fn push_event(&mut self, event: Event) {
        self.history = Some(Rc::new(HistNode {
            event,
            prev: self.history.take(),
        }));
    }

    /// Probabilities of the word-predictor events along this hypothesis,
    /// in sentence order (used by the best/worst-parse perplexities).
    pub fn predictor_logprobs(&self, model: &SlmModel) -> Result<Vec<f64>> {
        self.events()
            .iter()
            .filter(|e| e.comp == Component::Predictor)
            .map(|e| model.event_logprob(e))
            .collect()
    }
}

/// One bounded stack: ranked by score, highest on top, stable for ties.
#[derive(Debug, Clone, Default)]
struct BoundedStack {
    items: Vec<Hypothesis>,
}

impl BoundedStack {
    fn insert(&mut self, hyp: Hypothesis, params: &SearchParams) -> bool {
        if let Some(top) = self.items.first() {
            if hyp.logp < top.logp - params.stack_logp_threshold {
                return false;
            }
        }
        if params.merge_duplicates {
            if let Some(i) = self.items.iter().position(|h| h.prefix == hyp.prefix) {
                if self.items[i].logp >= hyp.logp {
                    return false;
                }
                self.items.remove(i);
            }
        }
        if self.items.len() >= params.max_stack_depth {
            let bottom = self.items.last().expect("non-empty at capacity");
            if hyp.logp <= bottom.logp {
                return false;
            }
        }
        let at = self.items.partition_point(|h| h.logp >= hyp.logp);
        self.items.insert(at, hyp);
        // A new top narrows the admissible spread.
        let floor = self.items[0].logp - params.stack_logp_threshold;
        self.items.retain(|h| h.logp >= floor);
        if self.items.len() > params.max_stack_depth {
            self.items.truncate(params.max_stack_depth);
        }
        true
    }

    fn remove_seq(&mut self, seq: u64) {
        self.items.retain(|h| h.seq != seq);
    }

    fn contains_seq(&self, seq: u64) -> bool {
        self.items.iter().any(|h| h.seq == seq)
    }
}

/// The set of stacks at one input position, indexed by adjoin count.
#[derive(Debug, Clone, Default)]
pub struct DecodeState {
    stacks: Vec<BoundedStack>,
    k: u32,
    next_seq: u64,
}

impl DecodeState {
    pub fn initial(model: &SlmModel) -> Self {
        let hyp = Hypothesis {
            prefix: WordParsePrefix::new(&model.specials),
            logp: 0.0,
            n_predictor_ops: 0,
            n_parser_ops: 0,
            history: None,
            seq: 0,
        };
        let mut stack = BoundedStack::default();
        stack.insert(hyp, &SearchParams::default());
        DecodeState {
            stacks: vec![stack],
            k: 0,
            next_seq: 1,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// All live hypotheses, highest score first within each stack.
    pub fn hypotheses(&self) -> Vec<&Hypothesis> {
        self.stacks.iter().flat_map(|s| s.items.iter()).collect()
    }

    pub fn complete_hypotheses(&self, model: &SlmModel) -> Vec<&Hypothesis> {
        self.hypotheses()
            .into_iter()
            .filter(|h| h.prefix.is_complete(&model.specials))
            .collect()
    }

    /// Keep only the hypotheses whose flat index (in `hypotheses()` order)
    /// is marked. The peeking rescore variants prune parse sets this way.
    pub fn retain_flat(&self, keep: &[bool]) -> DecodeState {
        let mut out = self.clone();
        let mut idx = 0;
        for stack in &mut out.stacks {
            stack.items.retain(|_| {
                let k = keep.get(idx).copied().unwrap_or(true);
                idx += 1;
                k
            });
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.stacks.iter().all(|s| s.items.is_empty())
    }

    fn ensure_stack(&mut self, j: usize) {
        while self.stacks.len() <= j {
            self.stacks.push(BoundedStack::default());
        }
    }

    /// Scan one word: predictor/tagger extension, the two-step parser
    /// extension and the second pruning step. `relax` disables the second
    /// pruning step and the cache hard pruning (used near the sentence end
    /// when searching for single-rooted parses).
    pub fn advance(
        &self,
        model: &SlmModel,
        word: Sym,
        params: &SearchParams,
        relax: bool,
    ) -> Result<DecodeState> {
        let sp = model.specials;
        let gamma = params.fudge;
        let mut next_seq = self.next_seq;
        let mut assign_seq = || {
            let s = next_seq;
            next_seq += 1;
            s
        };

        // PREDICTOR and TAGGER extension cycle.
        let mut shifted: Vec<BoundedStack> = vec![BoundedStack::default(); self.stacks.len()];
        let full_tags: Vec<Sym> = model.pos_tags.clone();
        for (j, stack) in self.stacks.iter().enumerate() {
            for hyp in &stack.items {
                if params.single_root
                    && word == sp.eos
                    && hyp.prefix.h_minus_1(&sp).tag != sp.sb
                {
                    // Single-root mode: the end of sentence may only follow
                    // a prefix whose words are joined under one constituent.
                    continue;
                }
                let p_word = model.predictor_prob(&hyp.prefix, word)?;
                // </s> carries its distinguished tag with probability one.
                let eos_tag = [sp.se];
                let tags: &[Sym] = if word == sp.eos {
                    &eos_tag
                } else if params.caches_enabled {
                    model.tagger_cache_lookup(word)
                } else {
                    &full_tags
                };
                for &tag in tags {
                    let (p_tag, tag_forced) = if word == sp.eos {
                        (1.0, true)
                    } else {
                        (model.tagger_prob(&hyp.prefix, word, tag)?, false)
                    };
                    let mut child = hyp.clone();
                    child.seq = assign_seq();
                    child.logp += p_word.ln() + gamma * p_tag.ln();
                    child.n_predictor_ops += 1;
                    child.push_event(Event {
                        comp: Component::Predictor,
                        u: word,
                        ctx: hyp.prefix.predictor_ctx(&sp).to_vec(),
                        forced: false,
                        h0_leaf: false,
                    });
                    child.push_event(Event {
                        comp: Component::Tagger,
                        u: tag,
                        ctx: hyp.prefix.tagger_ctx(word, &sp).to_vec(),
                        forced: tag_forced,
                        h0_leaf: false,
                    });
                    child.prefix.shift(word, tag);
                    shifted[j].insert(child, params);
                }
            }
        }

        // PARSER extension cycle, step one: every transition except null,
        // cascading into the next-lower stack of the same vector.
        let mut vec = shifted;
        let mut j = 0;
        while j < vec.len() {
            let snapshot = vec[j].items.clone();
            let mut unary_children: Vec<u64> = Vec::new();
            for hyp in snapshot {
                let made = self.expand_non_null(
                    model, &hyp, params, relax, gamma, &mut vec, j, &mut assign_seq,
                )?;
                match made {
                    Expanded::Dead => {
                        vec[j].remove_seq(hyp.seq);
                    }
                    Expanded::UnaryInto(seqs) => unary_children.extend(seqs),
                    Expanded::Done => {}
                }
            }
            // Unary children live in this same stack (the adjoin count did
            // not change); give their adjoin continuations a chance too.
            for seq in unary_children {
                if !vec[j].contains_seq(seq) {
                    continue;
                }
                let hyp = vec[j]
                    .items
                    .iter()
                    .find(|h| h.seq == seq)
                    .cloned()
                    .expect("checked above");
                let made = self.expand_non_null(
                    model, &hyp, params, relax, gamma, &mut vec, j, &mut assign_seq,
                )?;
                if matches!(made, Expanded::Dead) {
                    vec[j].remove_seq(seq);
                }
            }
            j += 1;
        }

        // Step two: the null transition moves the survivors into the next
        // stack vector; completed parses carry over untouched.
        let mut out = DecodeState {
            stacks: vec![BoundedStack::default(); vec.len()],
            k: self.k + 1,
            next_seq: 0,
        };
        for (j, stack) in vec.iter().enumerate() {
            for hyp in &stack.items {
                if hyp.prefix.is_complete(&sp) {
                    out.ensure_stack(j);
                    out.stacks[j].insert(hyp.clone(), params);
                    continue;
                }
                let sit = model.situation(&hyp.prefix);
                match sit.forced_action(&sp) {
                    Some(ParserAction::Null) => {
                        let mut child = hyp.clone();
                        child.seq = assign_seq();
                        child.push_event(Event {
                            comp: Component::Parser,
                            u: model
                                .action_sym(ParserAction::Null)
                                .unwrap_or(model.specials.pad),
                            ctx: hyp.prefix.parser_ctx(&sp).to_vec(),
                            forced: true,
                            h0_leaf: hyp.prefix.h0().leaf,
                        });
                        out.ensure_stack(j);
                        out.stacks[j].insert(child, params);
                    }
                    Some(_) => {
                        // Forced adjoin states already cascaded in step one;
                        // the un-extended original dies here.
                    }
                    None => {
                        let p = model.parser_prob(&hyp.prefix, ParserAction::Null)?;
                        if p <= 0.0 {
                            continue;
                        }
                        let mut child = hyp.clone();
                        child.seq = assign_seq();
                        child.logp += gamma * p.ln();
                        child.push_event(Event {
                            comp: Component::Parser,
                            u: model.action_sym(ParserAction::Null).expect("null in alphabet"),
                            ctx: hyp.prefix.parser_ctx(&sp).to_vec(),
                            forced: false,
                            h0_leaf: hyp.prefix.h0().leaf,
                        });
                        out.ensure_stack(j);
                        out.stacks[j].insert(child, params);
                    }
                }
            }
        }
        out.next_seq = next_seq;

        // Second pruning step: relative threshold against the topmost
        // hypothesis in the whole vector.
        if !relax && params.rel_threshold.is_finite() {
            let best = out
                .hypotheses()
                .iter()
                .map(|h| h.logp)
                .fold(f64::NEG_INFINITY, f64::max);
            let floor = best - params.rel_threshold;
            for stack in &mut out.stacks {
                stack.items.retain(|h| h.logp >= floor);
            }
        }
        if out.is_empty() {
            return Err(Error::DecodeFailure(format!(
                "all hypotheses pruned at position {}",
                self.k + 1
            )));
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn expand_non_null(
        &self,
        model: &SlmModel,
        hyp: &Hypothesis,
        params: &SearchParams,
        relax: bool,
        gamma: f64,
        vec: &mut Vec<BoundedStack>,
        j: usize,
        assign_seq: &mut dyn FnMut() -> u64,
    ) -> Result<Expanded> {
        let sp = model.specials;
        if hyp.prefix.is_complete(&sp) {
            return Ok(Expanded::Done);
        }
        let sit = model.situation(&hyp.prefix);
        if let Some(forced) = sit.forced_action(&sp) {
            if forced == ParserAction::Null {
                return Ok(Expanded::Done);
            }
            let mut child = hyp.clone();
            child.seq = assign_seq();
            child.n_parser_ops += 1;
            child.push_event(Event {
                comp: Component::Parser,
                u: model
                    .action_sym(forced)
                    .unwrap_or(model.specials.pad),
                ctx: hyp.prefix.parser_ctx(&sp).to_vec(),
                forced: true,
                h0_leaf: hyp.prefix.h0().leaf,
            });
            child.prefix.apply(forced)?;
            while vec.len() <= j + 1 {
                vec.push(BoundedStack::default());
            }
            vec[j + 1].insert(child, params);
            return Ok(Expanded::Done);
        }

        let cached: Option<&[ParserAction]> = if params.caches_enabled && !relax {
            let h0 = hyp.prefix.h0();
            let h1 = hyp.prefix.h_minus_1(&sp);
            match model.parser_cache_lookup(h0.tag, h1.tag) {
                // Hard pruning: unseen exposed tag pair, discard outright.
                None => return Ok(Expanded::Dead),
                some => some,
            }
        } else {
            None
        };

        let mut unary_seqs = Vec::new();
        for action in model.legal_actions(&hyp.prefix) {
            if action == ParserAction::Null {
                continue;
            }
            if let Some(cache) = cached {
                if !cache.contains(&action) {
                    continue;
                }
            }
            let p = model.parser_prob(&hyp.prefix, action)?;
            if p <= 0.0 {
                continue;
            }
            let mut child = hyp.clone();
            child.seq = assign_seq();
            child.logp += gamma * p.ln();
            child.push_event(Event {
                comp: Component::Parser,
                u: model.action_sym(action).expect("action in alphabet"),
                ctx: hyp.prefix.parser_ctx(&sp).to_vec(),
                forced: false,
                h0_leaf: hyp.prefix.h0().leaf,
            });
            child.prefix.apply(action)?;
            if action.is_adjoin() {
                child.n_parser_ops += 1;
                while vec.len() <= j + 1 {
                    vec.push(BoundedStack::default());
                }
                vec[j + 1].insert(child, params);
            } else {
                let seq = child.seq;
                if vec[j].insert(child, params) {
                    unary_seqs.push(seq);
                }
            }
        }
        if unary_seqs.is_empty() {
            Ok(Expanded::Done)
        } else {
            Ok(Expanded::UnaryInto(unary_seqs))
        }
    }
}

enum Expanded {
    Done,
    Dead,
    UnaryInto(Vec<u64>),
}

/// Decode result: the hypothesis sets at every word position (the parse
/// sets used for left-to-right word prediction) plus the completed parses.
pub struct DecodeResult {
    /// `per_position[k]` holds the surviving partial parses of the word
    /// k-prefix, for k = 0..=n.
    pub per_position: Vec<Vec<Hypothesis>>,
    /// Complete parses after consuming the end-of-sentence word, best
    /// score first.
    pub completes: Vec<Hypothesis>,
}

impl DecodeResult {
    /// Top-scoring complete parse; ties keep the stable decode order.
    pub fn best(&self) -> Option<&Hypothesis> {
        self.completes.first()
    }

    /// Bottom-scoring complete parse; ties keep the stable decode order.
    pub fn worst(&self) -> Option<&Hypothesis> {
        self.completes.last()
    }
}

/// Decode one sentence (token symbols, without boundary markers).
pub fn decode(model: &SlmModel, words: &[Sym], params: &SearchParams) -> Result<DecodeResult> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let mut state = DecodeState::initial(model);
    let mut per_position = Vec::with_capacity(words.len() + 1);
    per_position.push(state.hypotheses().into_iter().cloned().collect::<Vec<_>>());
    let n = words.len();
    for (i, &w) in words.iter().enumerate() {
        let relax = params.single_root && i + 1 == n;
        state = state.advance(model, w, params, relax)?;
        per_position.push(state.hypotheses().into_iter().cloned().collect::<Vec<_>>());
    }
    let relax = params.single_root;
    state = state.advance(model, model.specials.eos, params, relax)?;
    let mut completes: Vec<Hypothesis> = state
        .complete_hypotheses(model)
        .into_iter()
        .cloned()
        .collect();
    if completes.is_empty() {
        return Err(Error::DecodeFailure("no complete parse survived".into()));
    }
    completes.sort_by(|a, b| b.logp.partial_cmp(&a.logp).expect("finite scores"));
    // The last per-position entry is the set used to predict </s>.
    per_position.truncate(n + 1);
    Ok(DecodeResult {
        per_position,
        completes,
    })
}

/// Normalized weights rho over a hypothesis set from their scores.
pub fn normalized_weights(hyps: &[&Hypothesis]) -> Vec<f64> {
    if hyps.is_empty() {
        return Vec::new();
    }
    let max = hyps
        .iter()
        .map(|h| h.logp)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut ws: Vec<f64> = hyps.iter().map(|h| (h.logp - max).exp()).collect();
    let z: f64 = ws.iter().sum();
    for w in &mut ws {
        *w /= z;
    }
    ws
}

/// Log of the summed probability over a hypothesis set.
pub fn logsumexp_scores(hyps: &[&Hypothesis]) -> f64 {
    if hyps.is_empty() {
        return f64::NEG_INFINITY;
    }
    let max = hyps
        .iter()
        .map(|h| h.logp)
        .fold(f64::NEG_INFINITY, f64::max);
    max + hyps
        .iter()
        .map(|h| (h.logp - max).exp())
        .sum::<f64>()
        .ln()
}
