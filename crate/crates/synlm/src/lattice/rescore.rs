//! Lattice rescoring: path scoring, the Viterbi baseline over link-local
//! scores, the A* stack search with an n-gram compensation heuristic, the
//! N-best sampling diagnostic and the peeking word-probability variants.

use std::collections::HashMap;
use std::rc::Rc;

use crate::decoder::{normalized_weights, DecodeState, Hypothesis, SearchParams};
use crate::error::{Error, Result};
use crate::eval::word_prob_l2r;
use crate::interp::InterpModel;
use crate::model::SlmModel;
use crate::symtab::Sym;

use super::{Lattice, LinkId, NodeId, SplitTable};

/// Rescoring knobs: the language model weight and insertion penalty of the
/// path scoring function, the per-word and per-suffix compensation terms of
/// the heuristic, and the stack thresholds.
#[derive(Debug, Clone)]
pub struct RescoreParams {
    pub lm_weight: f64,
    pub log_ip: f64,
    pub log_comp: f64,
    pub log_final: f64,
    pub stack_depth: usize,
    pub stack_logp: f64,
}

impl Default for RescoreParams {
    fn default() -> Self {
        RescoreParams {
            lm_weight: 16.0,
            log_ip: 0.0,
            log_comp: 0.5,
            log_final: 0.0,
            stack_depth: 30,
            stack_logp: 100.0,
        }
    }
}

impl RescoreParams {
    pub fn unbounded(&self) -> RescoreParams {
        RescoreParams {
            stack_depth: usize::MAX / 2,
            stack_logp: f64::INFINITY,
            ..self.clone()
        }
    }
}

/// A left-to-right language model over lattice paths: the log-probability
/// of a link's word given the links walked so far.
pub trait LatticeLm {
    fn link_logp(&mut self, lattice: &Lattice, prefix: &[LinkId], link: LinkId) -> Result<f64>;
}

/// The first-pass score attached to each link.
pub struct LinkNgramLm;

impl LatticeLm for LinkNgramLm {
    fn link_logp(&mut self, lattice: &Lattice, _prefix: &[LinkId], link: LinkId) -> Result<f64> {
        Ok(lattice.link(link).ng_logp)
    }
}

/// A deleted-interpolation n-gram over the path words.
pub struct NgramLatticeLm<'a> {
    model: &'a InterpModel,
    bos: Sym,
    pad: Sym,
    unk: Option<Sym>,
}

impl<'a> NgramLatticeLm<'a> {
    pub fn new(model: &'a InterpModel, bos: &str, pad: &str, unk: &str) -> NgramLatticeLm<'a> {
        let tab = model.symtab();
        NgramLatticeLm {
            model,
            bos: tab.get(bos).unwrap_or(u32::MAX),
            pad: tab.get(pad).unwrap_or(u32::MAX - 1),
            unk: tab.get(unk),
        }
    }

    fn word(&self, w: &str) -> Result<Sym> {
        match self.model.symtab().get(w) {
            Some(s) if self.model.contains(s) => Ok(s),
            _ => self
                .unk
                .ok_or_else(|| Error::UnknownSymbol(w.to_string())),
        }
    }
}

impl LatticeLm for NgramLatticeLm<'_> {
    fn link_logp(&mut self, lattice: &Lattice, prefix: &[LinkId], link: LinkId) -> Result<f64> {
        let w = self.word(&lattice.link(link).word)?;
        let order = self.model.max_order();
        let mut ctx = Vec::with_capacity(order);
        for i in 0..order {
            let idx = prefix.len() as isize - 1 - i as isize;
            ctx.push(if idx >= 0 {
                self.word(&lattice.link(prefix[idx as usize]).word)?
            } else if idx == -1 {
                self.bos
            } else {
                self.pad
            });
        }
        Ok(self.model.prob(w, &ctx)?.ln())
    }
}

/// How the structured model assigns a word probability at a lattice node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeekMode {
    /// The proper left-to-right mixture over the surviving parses.
    Plain,
    /// For each future word keep only its most favorable parse.
    Peek,
    /// As `Peek`, and discard the non-selected parses from the stacks.
    PeekPrune,
    /// Renormalize the per-word maxima over the words that can actually
    /// follow, scaled by their first-pass n-gram mass.
    Normalized,
}

/// The structured language model driving lattice rescoring. Decoder states
/// are grown one link at a time and shared across the A* prefixes through
/// a per-lattice memo, so use one instance per lattice.
pub struct SlmLatticeLm<'a> {
    model: &'a SlmModel,
    params: SearchParams,
    mode: PeekMode,
    states: HashMap<Vec<LinkId>, Rc<DecodeState>>,
}

impl<'a> SlmLatticeLm<'a> {
    pub fn new(model: &'a SlmModel, params: SearchParams, mode: PeekMode) -> SlmLatticeLm<'a> {
        SlmLatticeLm {
            model,
            params,
            mode,
            states: HashMap::new(),
        }
    }

    fn prefix_end(&self, lattice: &Lattice, prefix: &[LinkId]) -> NodeId {
        match prefix.last() {
            Some(&l) => lattice.link(l).to,
            None => lattice.start(),
        }
    }

    /// Words labeling the links that leave a node.
    fn future_words(&self, lattice: &Lattice, node: NodeId) -> Vec<String> {
        let mut words: Vec<String> = lattice
            .outgoing(node)
            .iter()
            .map(|&l| lattice.link(l).word.clone())
            .collect();
        words.sort();
        words.dedup();
        words
    }

    /// Keep, for every word that can follow, the parse most favorable to
    /// it; everything else is dropped from the stacks.
    fn prune_for_futures(
        &self,
        state: &DecodeState,
        lattice: &Lattice,
        node: NodeId,
    ) -> Result<DecodeState> {
        let hyps = state.hypotheses();
        if hyps.len() <= 1 {
            return Ok(state.clone());
        }
        let weights = normalized_weights(&hyps);
        let mut keep = vec![false; hyps.len()];
        for word in self.future_words(lattice, node) {
            let w = self.model.word_sym(&word);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (i, (hyp, rho)) in hyps.iter().zip(&weights).enumerate() {
                let v = rho * self.model.l2r_word_prob(&hyp.prefix, w)?;
                if v > best.0 {
                    best = (v, i);
                }
            }
            keep[best.1] = true;
        }
        Ok(state.retain_flat(&keep))
    }

    fn state_for(&mut self, lattice: &Lattice, prefix: &[LinkId]) -> Result<Rc<DecodeState>> {
        if let Some(state) = self.states.get(prefix) {
            return Ok(Rc::clone(state));
        }
        let state = if prefix.is_empty() {
            Rc::new(DecodeState::initial(self.model))
        } else {
            let (parent, last) = prefix.split_at(prefix.len() - 1);
            let parent_state = self.state_for(lattice, parent)?;
            let base = if self.mode == PeekMode::PeekPrune {
                let node = self.prefix_end(lattice, parent);
                self.prune_for_futures(&parent_state, lattice, node)?
            } else {
                (*parent_state).clone()
            };
            let word = self.model.word_sym(&lattice.link(last[0]).word);
            Rc::new(base.advance(self.model, word, &self.params, false)?)
        };
        self.states.insert(prefix.to_vec(), Rc::clone(&state));
        Ok(state)
    }

    /// The word probability the chosen mode assigns at this position.
    pub fn word_prob(
        &mut self,
        lattice: &Lattice,
        prefix: &[LinkId],
        link: LinkId,
    ) -> Result<f64> {
        let state = self.state_for(lattice, prefix)?;
        let node = self.prefix_end(lattice, prefix);
        let word = self.model.word_sym(&lattice.link(link).word);
        let hyps = state.hypotheses();
        let weights = normalized_weights(&hyps);
        let alpha = |w: Sym,
                     hyps: &[&Hypothesis],
                     weights: &[f64],
                     model: &SlmModel|
         -> Result<f64> {
            let mut best = f64::NEG_INFINITY;
            for (hyp, rho) in hyps.iter().zip(weights) {
                best = best.max(rho * model.l2r_word_prob(&hyp.prefix, w)?);
            }
            Ok(best)
        };
        match self.mode {
            PeekMode::Plain => word_prob_l2r(self.model, &hyps, word),
            PeekMode::Peek | PeekMode::PeekPrune => alpha(word, &hyps, &weights, self.model),
            PeekMode::Normalized => {
                let mut total = 0.0;
                let mut this = 0.0;
                for fut in self.future_words(lattice, node) {
                    let w = self.model.word_sym(&fut);
                    let a = alpha(w, &hyps, &weights, self.model)?;
                    total += a;
                    if w == word {
                        this = a;
                    }
                }
                let ng_mass: f64 = lattice
                    .outgoing(node)
                    .iter()
                    .map(|&l| lattice.link(l).ng_logp.exp())
                    .sum();
                Ok(this / total * ng_mass)
            }
        }
    }
}

impl LatticeLm for SlmLatticeLm<'_> {
    fn link_logp(&mut self, lattice: &Lattice, prefix: &[LinkId], link: LinkId) -> Result<f64> {
        Ok(self.word_prob(lattice, prefix, link)?.ln())
    }
}

/// Interpolation of the first-pass link scores with a second model,
/// taking two steps through the second model whenever a split link pair is
/// encountered so the mixture stays aligned with the unsplit tokenization.
pub struct SplitInterpLm<L> {
    pub lambda: f64,
    pub new_lm: L,
    pub table: SplitTable,
}

impl<L: LatticeLm> SplitInterpLm<L> {
    fn is_split_first(&self, lattice: &Lattice, link: LinkId) -> bool {
        let l = lattice.link(link);
        if l.am_logp != 0.0 || l.ng_logp != 0.0 {
            return false;
        }
        let mid = l.to;
        if lattice.outgoing(mid).len() != 1 || lattice.incoming(mid).len() != 1 {
            return false;
        }
        let next = lattice.link(lattice.outgoing(mid)[0]);
        self.table.is_pair(&l.word, &next.word)
    }

    fn is_split_second(&self, lattice: &Lattice, prefix: &[LinkId], link: LinkId) -> bool {
        match prefix.last() {
            Some(&first) => {
                self.is_split_first(lattice, first)
                    && lattice.link(first).to == lattice.link(link).from
                    && self
                        .table
                        .is_pair(&lattice.link(first).word, &lattice.link(link).word)
            }
            None => false,
        }
    }
}

impl<L: LatticeLm> LatticeLm for SplitInterpLm<L> {
    fn link_logp(&mut self, lattice: &Lattice, prefix: &[LinkId], link: LinkId) -> Result<f64> {
        if self.is_split_first(lattice, link) {
            // Scored together with its second half.
            return Ok(0.0);
        }
        if self.is_split_second(lattice, prefix, link) {
            let (ctx, first) = prefix.split_at(prefix.len() - 1);
            let p_lat = lattice.link(link).ng_logp.exp();
            let p_left = self.new_lm.link_logp(lattice, ctx, first[0])?.exp();
            let p_right = self.new_lm.link_logp(lattice, prefix, link)?.exp();
            return Ok((self.lambda * p_lat + (1.0 - self.lambda) * p_left * p_right).ln());
        }
        let p_lat = lattice.link(link).ng_logp.exp();
        let p_new = self.new_lm.link_logp(lattice, prefix, link)?.exp();
        Ok((self.lambda * p_lat + (1.0 - self.lambda) * p_new).ln())
    }
}

/// f(p): acoustic score plus weighted language model score minus the
/// insertion penalty, summed over the links of a path.
pub fn path_score(
    lattice: &Lattice,
    path: &[LinkId],
    lm: &mut dyn LatticeLm,
    params: &RescoreParams,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, &link) in path.iter().enumerate() {
        let lm_lp = lm.link_logp(lattice, &path[..i], link)?;
        total += lattice.link(link).am_logp + params.lm_weight * lm_lp - params.log_ip;
    }
    Ok(total)
}

/// Best path by dynamic programming over the topological order, with a
/// link-local language model score per link.
pub fn viterbi_best(
    lattice: &Lattice,
    link_scores: &[f64],
    params: &RescoreParams,
) -> Result<(Vec<LinkId>, f64)> {
    if link_scores.len() != lattice.links().len() {
        return Err(Error::Config(format!(
            "{} link scores for {} links",
            link_scores.len(),
            lattice.links().len()
        )));
    }
    let order = lattice.topo_order()?;
    let n = lattice.nodes().len();
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut back: Vec<Option<LinkId>> = vec![None; n];
    best[lattice.start()] = 0.0;
    for v in order {
        if best[v] == f64::NEG_INFINITY {
            continue;
        }
        for &l in lattice.outgoing(v) {
            let link = lattice.link(l);
            let score =
                best[v] + link.am_logp + params.lm_weight * link_scores[l] - params.log_ip;
            if score > best[link.to] {
                best[link.to] = score;
                back[link.to] = Some(l);
            }
        }
    }
    if best[lattice.end()] == f64::NEG_INFINITY {
        return Err(Error::DecodeFailure("no path reaches the end node".into()));
    }
    let mut path = Vec::new();
    let mut v = lattice.end();
    while let Some(l) = back[v] {
        path.push(l);
        v = lattice.link(l).from;
    }
    path.reverse();
    Ok((path, best[lattice.end()]))
}

/// h_L per node: a Viterbi backward pass accumulating the compensated
/// n-gram scores, plus the per-suffix final term everywhere but the end
/// node (where the heuristic is exactly zero).
pub fn compute_hl(lattice: &Lattice, params: &RescoreParams) -> Result<Vec<f64>> {
    let order = lattice.topo_order()?;
    let n = lattice.nodes().len();
    let mut h = vec![f64::NEG_INFINITY; n];
    h[lattice.end()] = 0.0;
    for &v in order.iter().rev() {
        for &l in lattice.outgoing(v) {
            let link = lattice.link(l);
            if h[link.to] == f64::NEG_INFINITY {
                continue;
            }
            let via = link.am_logp
                + params.lm_weight * (link.ng_logp + params.log_comp)
                - params.log_ip
                + h[link.to];
            if via > h[v] {
                h[v] = via;
            }
        }
    }
    for (v, value) in h.iter_mut().enumerate() {
        if v != lattice.end() && value.is_finite() {
            *value += params.lm_weight * params.log_final;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone)]
struct AStarEntry {
    prefix: Vec<LinkId>,
    f: f64,
    g: f64,
}

#[derive(Debug)]
pub struct AStarResult {
    pub path: Vec<LinkId>,
    pub score: f64,
    /// Number of stack pops that expanded a prefix.
    pub extension_steps: usize,
    /// Prefixes still on the stack when the search returned.
    pub final_stack: Vec<Vec<LinkId>>,
}

/// A* over lattice paths: pop the top-ranked prefix, expand its one-link
/// continuations, stop when the popped entry is a complete path. With an
/// admissible compensation and unbounded stack this returns the exact
/// argmax of the scoring function.
pub fn astar_decode(
    lattice: &Lattice,
    lm: &mut dyn LatticeLm,
    params: &RescoreParams,
) -> Result<AStarResult> {
    let h = compute_hl(lattice, params)?;
    let mut stack: Vec<AStarEntry> = Vec::new();
    let insert = |stack: &mut Vec<AStarEntry>, entry: AStarEntry, params: &RescoreParams| {
        if let Some(top) = stack.first() {
            if entry.g < top.g - params.stack_logp {
                return;
            }
        }
        if stack.len() >= params.stack_depth {
            let bottom = stack.last().expect("non-empty at capacity");
            if entry.g <= bottom.g {
                return;
            }
        }
        let at = stack.partition_point(|e| e.g >= entry.g);
        stack.insert(at, entry);
        let floor = stack[0].g - params.stack_logp;
        stack.retain(|e| e.g >= floor);
        if stack.len() > params.stack_depth {
            stack.truncate(params.stack_depth);
        }
    };
    insert(
        &mut stack,
        AStarEntry {
            prefix: Vec::new(),
            f: 0.0,
            g: h[lattice.start()],
        },
        params,
    );
    let mut extension_steps = 0;
    loop {
        if stack.is_empty() {
            return Err(Error::DecodeFailure(
                "stack exhausted with no complete path".into(),
            ));
        }
        let top = stack.remove(0);
        let node = match top.prefix.last() {
            Some(&l) => lattice.link(l).to,
            None => lattice.start(),
        };
        if node == lattice.end() {
            return Ok(AStarResult {
                path: top.prefix,
                score: top.f,
                extension_steps,
                final_stack: stack.into_iter().map(|e| e.prefix).collect(),
            });
        }
        extension_steps += 1;
        for &l in lattice.outgoing(node) {
            let link = lattice.link(l);
            let lm_lp = lm.link_logp(lattice, &top.prefix, l)?;
            let f = top.f + link.am_logp + params.lm_weight * lm_lp - params.log_ip;
            let mut prefix = top.prefix.clone();
            prefix.push(l);
            insert(
                &mut stack,
                AStarEntry {
                    prefix,
                    f,
                    g: f + h[link.to],
                },
                params,
            );
        }
    }
}

/// N best complete paths under the first-pass scores, extracted by A* with
/// the exact heuristic continued past the first pop.
pub fn nbest_paths(lattice: &Lattice, n: usize, params: &RescoreParams) -> Result<Vec<Vec<LinkId>>> {
    let exact = RescoreParams {
        log_comp: 0.0,
        log_final: 0.0,
        ..params.unbounded()
    };
    let h = compute_hl(lattice, &exact)?;
    let mut stack: Vec<AStarEntry> = vec![AStarEntry {
        prefix: Vec::new(),
        f: 0.0,
        g: h[lattice.start()],
    }];
    let mut out = Vec::new();
    while !stack.is_empty() && out.len() < n {
        let top = stack.remove(0);
        let node = match top.prefix.last() {
            Some(&l) => lattice.link(l).to,
            None => lattice.start(),
        };
        if node == lattice.end() {
            out.push(top.prefix);
            continue;
        }
        for &l in lattice.outgoing(node) {
            let link = lattice.link(l);
            let f = top.f + link.am_logp + exact.lm_weight * link.ng_logp - exact.log_ip;
            let mut prefix = top.prefix.clone();
            prefix.push(l);
            let entry = AStarEntry {
                prefix,
                f,
                g: f + h[link.to],
            };
            let at = stack.partition_point(|e| e.g >= entry.g);
            stack.insert(at, entry);
        }
    }
    Ok(out)
}

/// Why an A* search missed a better sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// A prefix of the better path was still in the stack: the
    /// compensation underestimated the suffix.
    InsufficientCompensation,
    /// No prefix survived: compensation interacted with the search width.
    PrefixLost,
}

#[derive(Debug)]
pub struct NbestDiagnostics {
    pub astar: AStarResult,
    /// Rescored f(.) of each sampled path, in first-pass rank order.
    pub sample_scores: Vec<f64>,
    /// Number of sampled paths scoring strictly better than the A* output.
    pub rank: usize,
    pub failure: Option<FailureKind>,
}

/// Sample the N best first-pass paths, rescore them with the search model,
/// and rank the A* output among them. Exact searches rank 0.
pub fn nbest_sample_and_rank(
    lattice: &Lattice,
    lm: &mut dyn LatticeLm,
    params: &RescoreParams,
    n: usize,
) -> Result<NbestDiagnostics> {
    let astar = astar_decode(lattice, lm, params)?;
    let samples = nbest_paths(lattice, n, params)?;
    let mut sample_scores = Vec::with_capacity(samples.len());
    for path in &samples {
        sample_scores.push(path_score(lattice, path, lm, params)?);
    }
    let rank = sample_scores
        .iter()
        .filter(|&&s| s > astar.score + 1e-12)
        .count();
    let failure = if rank == 0 {
        None
    } else {
        let best = samples
            .iter()
            .zip(&sample_scores)
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
            .map(|(p, _)| p.clone())
            .expect("rank > 0 implies a sample");
        let prefix_live = astar
            .final_stack
            .iter()
            .any(|p| p.len() <= best.len() && best[..p.len()] == p[..]);
        Some(if prefix_live {
            FailureKind::InsufficientCompensation
        } else {
            FailureKind::PrefixLost
        })
    };
    Ok(NbestDiagnostics {
        astar,
        sample_scores,
        rank,
        failure,
    })
}

/// The smallest per-word compensation that makes the heuristic admissible
/// for this lattice and model, found by enumerating every path position.
/// A test and diagnostic helper; exponential in the lattice size.
pub fn admissible_comp(
    lattice: &Lattice,
    lm: &mut dyn LatticeLm,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for path in lattice.paths() {
        for (i, &link) in path.iter().enumerate() {
            let lm_lp = lm.link_logp(lattice, &path[..i], link)?;
            worst = worst.max(lm_lp - lattice.link(link).ng_logp);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_lattice, split_links, LatticeNode, Link};
    use crate::trainer::{init_trigram_equivalent, InitConfig};

    fn chain(words: &[&str]) -> Lattice {
        let n = words.len();
        let nodes: Vec<LatticeNode> = (0..=n)
            .map(|i| LatticeNode { time: i as f64 })
            .collect();
        let links: Vec<Link> = words
            .iter()
            .enumerate()
            .map(|(i, w)| Link {
                from: i,
                to: i + 1,
                word: w.to_string(),
                am_logp: -1.0 - i as f64 * 0.25,
                ng_logp: -0.5 - i as f64 * 0.125,
            })
            .collect();
        Lattice::build(nodes, links, 0, n).unwrap()
    }

    fn diamond() -> Lattice {
        let nodes = vec![
            LatticeNode { time: 0.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 2.0 },
        ];
        let links = vec![
            Link { from: 0, to: 1, word: "up".into(), am_logp: -1.0, ng_logp: -0.25 },
            Link { from: 0, to: 2, word: "down".into(), am_logp: -1.5, ng_logp: -1.5 },
            Link { from: 1, to: 3, word: "hill".into(), am_logp: -1.0, ng_logp: -0.5 },
            Link { from: 2, to: 3, word: "hill".into(), am_logp: -1.0, ng_logp: -0.5 },
        ];
        Lattice::build(nodes, links, 0, 3).unwrap()
    }

    #[test]
    fn hl_on_a_chain_is_the_suffix_sum() {
        let lattice = chain(&["a", "b", "c"]);
        let params = RescoreParams {
            lm_weight: 2.0,
            log_ip: 0.5,
            log_comp: 0.25,
            log_final: 0.0,
            ..RescoreParams::default()
        };
        let h = compute_hl(&lattice, &params).unwrap();
        assert_eq!(h[lattice.end()], 0.0);
        // Hand sum for node 2: the third link only.
        let l = lattice.link(2);
        let expect = l.am_logp + 2.0 * (l.ng_logp + 0.25) - 0.5;
        assert!((h[2] - expect).abs() < 1e-12);
        // Node 0 is the full suffix sum.
        let full: f64 = (0..3)
            .map(|i| {
                let l = lattice.link(i);
                l.am_logp + 2.0 * (l.ng_logp + 0.25) - 0.5
            })
            .sum();
        assert!((h[0] - full).abs() < 1e-12);
    }

    #[test]
    fn raising_comp_raises_every_interior_heuristic() {
        let lattice = diamond();
        let lo = compute_hl(&lattice, &RescoreParams { log_comp: 0.1, ..RescoreParams::default() }).unwrap();
        let hi = compute_hl(&lattice, &RescoreParams { log_comp: 0.9, ..RescoreParams::default() }).unwrap();
        for v in 0..lattice.nodes().len() {
            if v == lattice.end() {
                assert_eq!(lo[v], hi[v]);
            } else {
                assert!(hi[v] > lo[v]);
            }
        }
    }

    #[test]
    fn log_final_applies_once_per_nonempty_suffix() {
        let lattice = chain(&["a", "b"]);
        let base = RescoreParams { log_final: 0.0, lm_weight: 1.0, ..RescoreParams::default() };
        let with = RescoreParams { log_final: 2.0, lm_weight: 1.0, ..RescoreParams::default() };
        let h0 = compute_hl(&lattice, &base).unwrap();
        let h1 = compute_hl(&lattice, &with).unwrap();
        for v in 0..lattice.nodes().len() {
            if v == lattice.end() {
                assert_eq!(h1[v], 0.0);
            } else {
                assert!((h1[v] - h0[v] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn viterbi_picks_the_better_branch() {
        let lattice = diamond();
        let scores: Vec<f64> = lattice.links().iter().map(|l| l.ng_logp).collect();
        let (path, score) = viterbi_best(&lattice, &scores, &RescoreParams::default()).unwrap();
        assert_eq!(lattice.path_words(&path), vec!["up", "hill"]);
        // Exhaustive check.
        let best = lattice
            .paths()
            .into_iter()
            .map(|p| {
                p.iter()
                    .map(|&l| {
                        lattice.link(l).am_logp + 16.0 * lattice.link(l).ng_logp
                    })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((score - best).abs() < 1e-9);
    }

    #[test]
    fn single_path_viterbi_returns_it() {
        let lattice = chain(&["x", "y"]);
        let scores: Vec<f64> = lattice.links().iter().map(|l| l.ng_logp).collect();
        let (path, _) = viterbi_best(&lattice, &scores, &RescoreParams::default()).unwrap();
        assert_eq!(path, vec![0, 1]);
    }

    #[test]
    fn lambda_sweep_over_mixed_link_scores_is_well_behaved() {
        // Two link-local score sets that prefer different branches; the
        // sweep must move from one winner to the other monotonically, with
        // a single switch point.
        let lattice = diamond();
        let a: Vec<f64> = vec![-0.1, -3.0, -0.5, -0.5];
        let b: Vec<f64> = vec![-3.0, -0.1, -0.5, -0.5];
        let mut winners = Vec::new();
        for step in 0..=10 {
            let lam = step as f64 / 10.0;
            let mixed: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (lam * x.exp() + (1.0 - lam) * y.exp()).ln())
                .collect();
            let (path, _) = viterbi_best(&lattice, &mixed, &RescoreParams::default()).unwrap();
            winners.push(lattice.path_words(&path)[0].to_string());
        }
        assert_eq!(winners.first().unwrap(), "down");
        assert_eq!(winners.last().unwrap(), "up");
        let switches = winners.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 1);
    }

    #[test]
    fn perfect_heuristic_takes_exactly_path_length_steps() {
        // With the link n-gram as the rescoring model and zero
        // compensation, the heuristic is the exact best suffix.
        let lattice = diamond();
        let params = RescoreParams {
            log_comp: 0.0,
            log_final: 0.0,
            ..RescoreParams::default().unbounded()
        };
        let mut lm = LinkNgramLm;
        let result = astar_decode(&lattice, &mut lm, &params).unwrap();
        assert_eq!(result.extension_steps, result.path.len());
        assert_eq!(lattice.path_words(&result.path), vec!["up", "hill"]);
    }

    #[test]
    fn astar_matches_exhaustive_enumeration_on_random_lattices() {
        let vocab = ["a", "b", "c", "d"];
        for seed in 0..100 {
            let lattice = random_lattice(seed, 12, &vocab);
            let mut lm = LinkNgramLm;
            // Admissible by construction for the link model with comp 0;
            // keep a positive comp to exercise the overestimate path.
            let params = RescoreParams {
                log_comp: 0.3,
                ..RescoreParams::default().unbounded()
            };
            let result = astar_decode(&lattice, &mut lm, &params).unwrap();
            let best = lattice
                .paths()
                .into_iter()
                .map(|p| path_score(&lattice, &p, &mut lm, &params).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (result.score - best).abs() < 1e-9,
                "seed {}: astar {} vs best {}",
                seed,
                result.score,
                best
            );
        }
    }

    #[test]
    fn g_overestimates_every_completion_when_admissible() {
        let lattice = diamond();
        let params = RescoreParams {
            log_comp: 0.0,
            ..RescoreParams::default().unbounded()
        };
        let h = compute_hl(&lattice, &params).unwrap();
        let mut lm = LinkNgramLm;
        for path in lattice.paths() {
            for cut in 0..path.len() {
                let prefix = &path[..cut];
                let f_prefix = path_score(&lattice, prefix, &mut lm, &params).unwrap();
                let end = prefix
                    .last()
                    .map(|&l| lattice.link(l).to)
                    .unwrap_or(lattice.start());
                let g = f_prefix + h[end];
                let f_full = path_score(&lattice, &path, &mut lm, &params).unwrap();
                assert!(g >= f_full - 1e-9);
            }
        }
    }

    #[test]
    fn infinite_heuristic_degenerates_to_exhaustive_search() {
        // A huge compensation keeps every incomplete prefix above every
        // complete path, so the search pops all prefixes first.
        let lattice = diamond();
        let params = RescoreParams {
            log_comp: 1000.0,
            ..RescoreParams::default().unbounded()
        };
        let mut lm = LinkNgramLm;
        let result = astar_decode(&lattice, &mut lm, &params).unwrap();
        // Every incomplete prefix was expanded before any complete path
        // was popped: the empty prefix plus the two branch prefixes.
        assert_eq!(result.extension_steps, 3);
        // Still exact.
        let best = lattice
            .paths()
            .into_iter()
            .map(|p| path_score(&lattice, &p, &mut lm, &params).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((result.score - best).abs() < 1e-9);
    }

    #[test]
    fn nbest_rank_zero_for_exact_search() {
        for seed in 0..20 {
            let lattice = random_lattice(seed, 12, &["a", "b", "c"]);
            let mut lm = LinkNgramLm;
            let params = RescoreParams {
                log_comp: 0.2,
                ..RescoreParams::default().unbounded()
            };
            let diag = nbest_sample_and_rank(&lattice, &mut lm, &params, 5).unwrap();
            assert_eq!(diag.rank, 0);
            assert!(diag.failure.is_none());
        }
    }

    #[test]
    fn nbest_samples_come_out_in_first_pass_order() {
        let lattice = diamond();
        let samples = nbest_paths(&lattice, 5, &RescoreParams::default()).unwrap();
        assert_eq!(samples.len(), 2);
        let mut lm = LinkNgramLm;
        let p = RescoreParams {
            log_comp: 0.0,
            ..RescoreParams::default().unbounded()
        };
        let s0 = path_score(&lattice, &samples[0], &mut lm, &p).unwrap();
        let s1 = path_score(&lattice, &samples[1], &mut lm, &p).unwrap();
        assert!(s0 >= s1);
    }

    #[test]
    fn starved_stack_loses_the_optimum_prefix() {
        // The rescoring model disagrees with the first-pass scores: the
        // truly best branch starts with a mediocre link, the heuristic
        // (built on the n-gram tails) makes the other branch look safe, and
        // a depth-1 stack drops the good prefix outright.
        struct TableLm(Vec<f64>);
        impl LatticeLm for TableLm {
            fn link_logp(
                &mut self,
                _lattice: &Lattice,
                _prefix: &[LinkId],
                link: LinkId,
            ) -> Result<f64> {
                Ok(self.0[link])
            }
        }
        let nodes = vec![
            LatticeNode { time: 0.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 2.0 },
        ];
        let links = vec![
            Link { from: 0, to: 1, word: "good".into(), am_logp: 0.0, ng_logp: -2.0 },
            Link { from: 0, to: 2, word: "bad".into(), am_logp: 0.0, ng_logp: -0.1 },
            Link { from: 1, to: 3, word: "tail".into(), am_logp: 0.0, ng_logp: -0.1 },
            Link { from: 2, to: 3, word: "tail".into(), am_logp: 0.0, ng_logp: -0.1 },
        ];
        let lattice = Lattice::build(nodes, links, 0, 3).unwrap();
        // True scores: good branch -2.0 then -0.1; bad branch -0.1 then -8.
        let mut lm = TableLm(vec![-2.0, -0.1, -0.1, -8.0]);
        let params = RescoreParams {
            lm_weight: 1.0,
            log_ip: 0.0,
            log_comp: 0.0,
            log_final: 0.0,
            stack_depth: 1,
            stack_logp: f64::INFINITY,
        };
        let diag = nbest_sample_and_rank(&lattice, &mut lm, &params, 2).unwrap();
        assert!(diag.rank > 0, "search should have missed the optimum");
        assert_eq!(diag.failure, Some(FailureKind::PrefixLost));
    }

    #[test]
    fn split_interp_lambda_one_keeps_lattice_scores() {
        let table = SplitTable::builtin();
        let base = chain(&["don't", "stop"]);
        let lattice = split_links(&base, &table).unwrap();
        let mut plain = LinkNgramLm;
        let mut mixed = SplitInterpLm {
            lambda: 1.0,
            new_lm: LinkNgramLm,
            table: table.clone(),
        };
        let params = RescoreParams::default().unbounded();
        let path = lattice.paths().remove(0);
        let a = path_score(&lattice, &path, &mut plain, &params).unwrap();
        let b = path_score(&lattice, &path, &mut mixed, &params).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn split_interp_matches_the_two_step_hand_value() {
        let table = SplitTable::builtin();
        let base = chain(&["don't"]);
        let lattice = split_links(&base, &table).unwrap();
        // A word model that knows `do` and `n't`.
        let corpus: Vec<Vec<String>> = vec![
            vec!["do".into(), "n't".into()],
            vec!["do".into(), "n't".into()],
            vec!["do".into(), "do".into()],
        ];
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        let lambda = 0.4;
        let params = RescoreParams {
            lm_weight: 1.0,
            log_ip: 0.0,
            ..RescoreParams::default().unbounded()
        };
        let mut mixed = SplitInterpLm {
            lambda,
            new_lm: SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain),
            table: table.clone(),
        };
        let path = lattice.paths().remove(0);
        let got = path_score(&lattice, &path, &mut mixed, &params).unwrap();
        // Hand evaluation: first link contributes only its (zero) acoustic
        // score; the second carries am + ln(lambda*P_lat + (1-lambda)
        // * P_new(do|<s>) * P_new(n't|<s>, do)).
        let mut slm = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
        let p_do = slm.word_prob(&lattice, &[], path[0]).unwrap();
        let p_nt = slm.word_prob(&lattice, &path[..1], path[1]).unwrap();
        let p_lat = lattice.link(path[1]).ng_logp.exp();
        let expect = lattice.link(path[1]).am_logp
            + (lambda * p_lat + (1.0 - lambda) * p_do * p_nt).ln();
        assert!((got - expect).abs() < 1e-9, "{} vs {}", got, expect);
    }

    #[test]
    fn peeking_with_single_parse_and_single_future_matches_plain() {
        let corpus: Vec<Vec<String>> = vec![
            vec!["u".into(), "v".into()],
            vec!["v".into(), "u".into()],
        ];
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        let lattice = chain(&["u", "v"]);
        let mut plain = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
        let mut peek = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Peek);
        let mut prune = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::PeekPrune);
        for (i, prefix_len) in [(0usize, 0usize), (1, 1)] {
            let prefix: Vec<LinkId> = (0..prefix_len).collect();
            let a = plain.word_prob(&lattice, &prefix, i).unwrap();
            let b = peek.word_prob(&lattice, &prefix, i).unwrap();
            let c = prune.word_prob(&lattice, &prefix, i).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_peeking_masses_sum_to_the_ngram_mass() {
        let corpus: Vec<Vec<String>> = vec![
            vec!["u".into(), "v".into()],
            vec!["v".into(), "u".into()],
            vec!["u".into(), "u".into()],
        ];
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        // Two futures from the start node.
        let nodes = vec![
            LatticeNode { time: 0.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 1.0 },
            LatticeNode { time: 2.0 },
        ];
        let links = vec![
            Link { from: 0, to: 1, word: "u".into(), am_logp: -1.0, ng_logp: -0.7 },
            Link { from: 0, to: 2, word: "v".into(), am_logp: -1.0, ng_logp: -1.1 },
            Link { from: 1, to: 3, word: "v".into(), am_logp: -1.0, ng_logp: -0.4 },
            Link { from: 2, to: 3, word: "u".into(), am_logp: -1.0, ng_logp: -0.4 },
        ];
        let lattice = Lattice::build(nodes, links, 0, 3).unwrap();
        let mut lm = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Normalized);
        let p_u = lm.word_prob(&lattice, &[], 0).unwrap();
        let p_v = lm.word_prob(&lattice, &[], 1).unwrap();
        let ng_mass = (-0.7f64).exp() + (-1.1f64).exp();
        assert!((p_u + p_v - ng_mass).abs() < 1e-12);
    }

    #[test]
    fn admissible_comp_bounds_the_model_difference() {
        let corpus: Vec<Vec<String>> = vec![
            vec!["a".into(), "b".into()],
            vec!["b".into(), "a".into()],
        ];
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        for seed in 0..10 {
            let lattice = random_lattice(seed, 10, &["a", "b"]);
            let mut lm = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
            let comp = admissible_comp(&lattice, &mut lm).unwrap() + 1e-6;
            let params = RescoreParams {
                log_comp: comp,
                log_final: 0.0,
                lm_weight: 4.0,
                log_ip: 0.1,
                ..RescoreParams::default().unbounded()
            };
            let mut lm = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
            let result = astar_decode(&lattice, &mut lm, &params).unwrap();
            let mut lm = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
            let best = lattice
                .paths()
                .into_iter()
                .map(|p| path_score(&lattice, &p, &mut lm, &params).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((result.score - best).abs() < 1e-9, "seed {}", seed);
        }
    }
}
