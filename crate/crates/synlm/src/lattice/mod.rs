//! Word lattices: a DAG of timed nodes and word-labeled links carrying
//! first-pass acoustic and n-gram scores, plus the rescoring machinery
//! (Viterbi baseline, A* with compensation heuristics, link splitting and
//! peeking variants).

mod rescore;

pub use rescore::{
    admissible_comp, astar_decode, compute_hl, nbest_paths, nbest_sample_and_rank, path_score,
    viterbi_best, AStarResult, FailureKind, LatticeLm, LinkNgramLm, NbestDiagnostics, NgramLatticeLm,
    PeekMode, RescoreParams, SlmLatticeLm, SplitInterpLm,
};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub type NodeId = usize;
pub type LinkId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeNode {
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub word: String,
    pub am_logp: f64,
    pub ng_logp: f64,
}

/// A validated word lattice: acyclic, one source (the declared start) and
/// one sink (the declared end), link times non-decreasing. Natural logs
/// throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    nodes: Vec<LatticeNode>,
    links: Vec<Link>,
    start: NodeId,
    end: NodeId,
    node_ids: Vec<u32>,
    link_ids: Vec<u32>,
    outgoing: Vec<Vec<LinkId>>,
    incoming: Vec<Vec<LinkId>>,
}

impl Lattice {
    /// Build from parts with fresh sequential external ids.
    pub fn build(
        nodes: Vec<LatticeNode>,
        links: Vec<Link>,
        start: NodeId,
        end: NodeId,
    ) -> Result<Lattice> {
        let node_ids = (0..nodes.len() as u32).collect();
        let link_ids = (0..links.len() as u32).collect();
        Self::assemble(nodes, links, start, end, node_ids, link_ids)
    }

    fn assemble(
        nodes: Vec<LatticeNode>,
        links: Vec<Link>,
        start: NodeId,
        end: NodeId,
        node_ids: Vec<u32>,
        link_ids: Vec<u32>,
    ) -> Result<Lattice> {
        let n = nodes.len();
        if start >= n || end >= n {
            return Err(Error::LatticeFormat("dangling start/end node".into()));
        }
        let mut outgoing: Vec<Vec<LinkId>> = vec![Vec::new(); n];
        let mut incoming: Vec<Vec<LinkId>> = vec![Vec::new(); n];
        for (i, l) in links.iter().enumerate() {
            if l.from >= n || l.to >= n {
                return Err(Error::LatticeFormat(format!(
                    "link {} references a missing node",
                    i
                )));
            }
            if nodes[l.to].time < nodes[l.from].time {
                return Err(Error::LatticeFormat(format!(
                    "link {} runs backwards in time",
                    i
                )));
            }
            outgoing[l.from].push(i);
            incoming[l.to].push(i);
        }
        if !incoming[start].is_empty() {
            return Err(Error::LatticeFormat("start node has incoming links".into()));
        }
        if !outgoing[end].is_empty() {
            return Err(Error::LatticeFormat("end node has outgoing links".into()));
        }
        for v in 0..n {
            if v != start && incoming[v].is_empty() {
                return Err(Error::LatticeFormat(format!(
                    "node {} is a second start (no incoming links)",
                    node_ids[v]
                )));
            }
            if v != end && outgoing[v].is_empty() {
                return Err(Error::LatticeFormat(format!(
                    "node {} is a second end (no outgoing links)",
                    node_ids[v]
                )));
            }
        }
        let lattice = Lattice {
            nodes,
            links,
            start,
            end,
            node_ids,
            link_ids,
            outgoing,
            incoming,
        };
        lattice.topo_order()?;
        Ok(lattice)
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn end(&self) -> NodeId {
        self.end
    }

    pub fn outgoing(&self, v: NodeId) -> &[LinkId] {
        &self.outgoing[v]
    }

    pub fn incoming(&self, v: NodeId) -> &[LinkId] {
        &self.incoming[v]
    }

    /// Topological node order; fails on cycles.
    pub fn topo_order(&self) -> Result<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = self.incoming.iter().map(|v| v.len()).collect();
        let mut queue: Vec<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &l in &self.outgoing[v] {
                let to = self.links[l].to;
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    queue.push(to);
                }
            }
        }
        if order.len() != n {
            return Err(Error::LatticeFormat("lattice contains a cycle".into()));
        }
        Ok(order)
    }

    /// Every complete path as a link sequence (test oracle; exponential).
    pub fn paths(&self) -> Vec<Vec<LinkId>> {
        let mut out = Vec::new();
        let mut stack = vec![(self.start, Vec::new())];
        while let Some((v, path)) = stack.pop() {
            if v == self.end {
                out.push(path);
                continue;
            }
            for &l in &self.outgoing[v] {
                let mut p = path.clone();
                p.push(l);
                stack.push((self.links[l].to, p));
            }
        }
        out.sort();
        out
    }

    pub fn path_words(&self, path: &[LinkId]) -> Vec<&str> {
        path.iter().map(|&l| self.links[l].word.as_str()).collect()
    }
}

/// Lattice text format, whitespace-delimited:
///
/// ```text
/// SLMLAT 1
/// NODES <count>
/// <id> <time>
/// LINKS <count>
/// <id> <start_id> <end_id> <word> <am_logp> <ng_logp>
/// START <id>
/// END <id>
/// ```
pub fn write_lattice(lattice: &Lattice) -> String {
    let mut out = String::from("SLMLAT 1\n");
    out.push_str(&format!("NODES {}\n", lattice.nodes.len()));
    for (i, node) in lattice.nodes.iter().enumerate() {
        out.push_str(&format!("{} {}\n", lattice.node_ids[i], node.time));
    }
    out.push_str(&format!("LINKS {}\n", lattice.links.len()));
    for (i, link) in lattice.links.iter().enumerate() {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            lattice.link_ids[i],
            lattice.node_ids[link.from],
            lattice.node_ids[link.to],
            link.word,
            link.am_logp,
            link.ng_logp
        ));
    }
    out.push_str(&format!("START {}\n", lattice.node_ids[lattice.start]));
    out.push_str(&format!("END {}\n", lattice.node_ids[lattice.end]));
    out
}

pub fn read_lattice(text: &str) -> Result<Lattice> {
    let mut toks = text.split_whitespace();
    let mut need = |what: &str| -> Result<&str> {
        toks.next()
            .ok_or_else(|| Error::LatticeFormat(format!("unexpected end of input, wanted {}", what)))
    };
    let expect = |tok: &str, want: &str| -> Result<()> {
        if tok != want {
            return Err(Error::LatticeFormat(format!(
                "expected `{}`, found `{}`",
                want, tok
            )));
        }
        Ok(())
    };
    expect(need("header")?, "SLMLAT")?;
    expect(need("version")?, "1")?;
    expect(need("NODES")?, "NODES")?;
    let n: usize = need("node count")?
        .parse()
        .map_err(|_| Error::LatticeFormat("bad node count".into()))?;
    let mut nodes = Vec::with_capacity(n);
    let mut node_ids = Vec::with_capacity(n);
    let mut by_id: HashMap<u32, NodeId> = HashMap::new();
    for _ in 0..n {
        let id: u32 = need("node id")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad node id".into()))?;
        let time: f64 = need("node time")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad node time".into()))?;
        if time < 0.0 {
            return Err(Error::LatticeFormat("negative node time".into()));
        }
        if by_id.insert(id, nodes.len()).is_some() {
            return Err(Error::LatticeFormat(format!("duplicate node id {}", id)));
        }
        node_ids.push(id);
        nodes.push(LatticeNode { time });
    }
    expect(need("LINKS")?, "LINKS")?;
    let m: usize = need("link count")?
        .parse()
        .map_err(|_| Error::LatticeFormat("bad link count".into()))?;
    let mut links = Vec::with_capacity(m);
    let mut link_ids = Vec::with_capacity(m);
    let lookup = |by_id: &HashMap<u32, NodeId>, id: u32| -> Result<NodeId> {
        by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::LatticeFormat(format!("link references missing node {}", id)))
    };
    for _ in 0..m {
        let id: u32 = need("link id")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad link id".into()))?;
        let from: u32 = need("link start")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad link start".into()))?;
        let to: u32 = need("link end")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad link end".into()))?;
        let word = need("link word")?.to_string();
        let am_logp: f64 = need("am score")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad acoustic score".into()))?;
        let ng_logp: f64 = need("ng score")?
            .parse()
            .map_err(|_| Error::LatticeFormat("bad n-gram score".into()))?;
        link_ids.push(id);
        links.push(Link {
            from: lookup(&by_id, from)?,
            to: lookup(&by_id, to)?,
            word,
            am_logp,
            ng_logp,
        });
    }
    expect(need("START")?, "START")?;
    let start: u32 = need("start id")?
        .parse()
        .map_err(|_| Error::LatticeFormat("bad start id".into()))?;
    expect(need("END")?, "END")?;
    let end: u32 = need("end id")?
        .parse()
        .map_err(|_| Error::LatticeFormat("bad end id".into()))?;
    if toks.next().is_some() {
        return Err(Error::LatticeFormat("trailing tokens after END".into()));
    }
    Lattice::assemble(
        nodes,
        links,
        lookup(&by_id, start)?,
        lookup(&by_id, end)?,
        node_ids,
        link_ids,
    )
}

/// Tokenization split table: word -> (left part, right part).
#[derive(Debug, Clone, Default)]
pub struct SplitTable {
    map: HashMap<String, (String, String)>,
}

impl SplitTable {
    pub fn parse(text: &str) -> Result<SplitTable> {
        let mut map = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = line.split('\t');
            match (f.next(), f.next(), f.next()) {
                (Some(w), Some(l), Some(r)) => {
                    map.insert(w.to_string(), (l.to_string(), r.to_string()));
                }
                _ => {
                    return Err(Error::LatticeFormat(format!(
                        "split table line `{}` is not word<TAB>left<TAB>right",
                        line
                    )))
                }
            }
        }
        Ok(SplitTable { map })
    }

    /// The table of common contractions shipped with the crate.
    pub fn builtin() -> SplitTable {
        Self::parse(include_str!("../../data/split-table.txt")).expect("builtin split table")
    }

    pub fn get(&self, word: &str) -> Option<&(String, String)> {
        self.map.get(word)
    }

    pub fn is_pair(&self, left: &str, right: &str) -> bool {
        self.map
            .values()
            .any(|(l, r)| l == left && r == right)
    }
}

/// Split every link whose word is in the table into two links joined by a
/// fresh intermediate node. The acoustic and language model scores of the
/// original link move onto the second new link; the first one carries zero
/// scores. The intermediate node gets the end node's time.
pub fn split_links(lattice: &Lattice, table: &SplitTable) -> Result<Lattice> {
    let mut nodes = lattice.nodes.clone();
    let mut links: Vec<Link> = Vec::with_capacity(lattice.links.len());
    for link in &lattice.links {
        match table.get(&link.word) {
            None => links.push(link.clone()),
            Some((left, right)) => {
                let mid = nodes.len();
                nodes.push(LatticeNode {
                    time: nodes[link.to].time,
                });
                links.push(Link {
                    from: link.from,
                    to: mid,
                    word: left.clone(),
                    am_logp: 0.0,
                    ng_logp: 0.0,
                });
                links.push(Link {
                    from: mid,
                    to: link.to,
                    word: right.clone(),
                    am_logp: link.am_logp,
                    ng_logp: link.ng_logp,
                });
            }
        }
    }
    Lattice::build(nodes, links, lattice.start, lattice.end)
}

/// Deterministic random DAG lattice for tests and diagnostics: a layered
/// graph with at most `max_links` links, words drawn from `vocab`.
pub fn random_lattice(seed: u64, max_links: usize, vocab: &[&str]) -> Lattice {
    let mut rng = SplitMix64::new(seed);
    loop {
        let layers = 2 + rng.below(4);
        let mut layer_nodes: Vec<Vec<NodeId>> = Vec::new();
        let mut nodes = Vec::new();
        for layer in 0..=layers {
            let width = if layer == 0 || layer == layers {
                1
            } else {
                1 + rng.below(3)
            };
            let mut ids = Vec::new();
            for _ in 0..width {
                ids.push(nodes.len());
                nodes.push(LatticeNode {
                    time: layer as f64,
                });
            }
            layer_nodes.push(ids);
        }
        let mut links = Vec::new();
        for layer in 0..layers {
            let (src, dst) = (&layer_nodes[layer], &layer_nodes[layer + 1]);
            // Every source reaches something, every destination is reached.
            for &s in src {
                let d = dst[rng.below(dst.len())];
                links.push((s, d));
            }
            for &d in dst {
                if !links.iter().any(|&(_, t)| t == d) {
                    let s = src[rng.below(src.len())];
                    links.push((s, d));
                }
            }
            // A few extras for ambiguity.
            for _ in 0..rng.below(3) {
                let s = src[rng.below(src.len())];
                let d = dst[rng.below(dst.len())];
                links.push((s, d));
            }
        }
        if links.len() > max_links {
            continue;
        }
        let links: Vec<Link> = links
            .into_iter()
            .map(|(from, to)| {
                let w = rng.below(vocab.len());
                Link {
                    from,
                    to,
                    word: vocab[w].to_string(),
                    am_logp: -5.0 * rng.next_f64(),
                    ng_logp: -3.0 * rng.next_f64() - 0.05,
                }
            })
            .collect();
        let start = layer_nodes[0][0];
        let end = layer_nodes[layers][0];
        match Lattice::build(nodes, links, start, end) {
            Ok(l) => return l,
            Err(_) => continue,
        }
    }
}
