//! Deleted-interpolation conditional models P(u | z1..zn).
//!
//! A model mixes relative-frequency estimates of decreasing context order,
//! recursively, bottoming out at the uniform distribution over the predicted
//! alphabet. The mixing weights are tied by count-range buckets and trained
//! with EM on held-out counts.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symtab::{Sym, SymbolTable};

type Key = Box<[Sym]>;

/// Joint counts at maximal context order; lower orders are derived by
/// marginalizing context elements right to left.
#[derive(Debug, Clone)]
pub struct EventCounts {
    max_order: usize,
    table: BTreeMap<Key, f64>,
    total: f64,
}

impl EventCounts {
    pub fn new(max_order: usize) -> Self {
        Self {
            max_order,
            table: BTreeMap::new(),
            total: 0.0,
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    /// Tally one event `u | z1..zn` with the given weight. Weights default
    /// to 1 for treebank initialization; EM reestimation feeds fractional
    /// expected counts through the same entry point.
    pub fn add(&mut self, u: Sym, ctx: &[Sym], weight: f64) -> Result<()> {
        if weight < 0.0 {
            return Err(Error::NegativeWeight(weight));
        }
        if ctx.len() != self.max_order {
            return Err(Error::Config(format!(
                "event context has {} elements, model order is {}",
                ctx.len(),
                self.max_order
            )));
        }
        let mut key = Vec::with_capacity(1 + ctx.len());
        key.push(u);
        key.extend_from_slice(ctx);
        *self.table.entry(key.into_boxed_slice()).or_insert(0.0) += weight;
        self.total += weight;
        Ok(())
    }

    pub fn merge(&mut self, other: &EventCounts) -> Result<()> {
        for (k, &w) in &other.table {
            let (u, ctx) = (k[0], &k[1..]);
            self.add(u, ctx, w)?;
        }
        Ok(())
    }

    /// Drop entries below `floor` to bound table growth during EM.
    pub fn prune_below(&mut self, floor: f64) {
        self.table.retain(|_, w| *w >= floor);
        self.total = self.table.values().sum();
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, &[Sym], f64)> {
        self.table.iter().map(|(k, &w)| (k[0], &k[1..], w))
    }

    /// Marginal joint count C(u, z1..zk).
    fn marginal(&self, order: usize) -> BTreeMap<Key, f64> {
        let mut out: BTreeMap<Key, f64> = BTreeMap::new();
        for (k, &w) in &self.table {
            let key: Key = k[..=order].to_vec().into_boxed_slice();
            *out.entry(key).or_insert(0.0) += w;
        }
        out
    }

    /// Serialize as `count TAB u TAB z1 .. TAB zn` lines, sorted for
    /// deterministic output.
    pub fn to_text(&self, symtab: &SymbolTable) -> String {
        let mut lines: Vec<String> = self
            .table
            .iter()
            .map(|(k, w)| {
                let mut line = format!("{}", w);
                for &s in k.iter() {
                    line.push('\t');
                    line.push_str(symtab.name(s));
                }
                line
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, max_order: usize, symtab: &mut SymbolTable) -> Result<Self> {
        let mut counts = EventCounts::new(max_order);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let w: f64 = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::CountFile(format!("line {}: bad count", lineno + 1)))?;
            let toks: Vec<&str> = fields.collect();
            if toks.len() != max_order + 1 {
                return Err(Error::CountFile(format!(
                    "line {}: expected {} symbols, found {}",
                    lineno + 1,
                    max_order + 1,
                    toks.len()
                )));
            }
            let u = symtab.intern(toks[0]);
            let ctx: Vec<Sym> = toks[1..].iter().map(|t| symtab.intern(t)).collect();
            counts.add(u, &ctx, w)?;
        }
        Ok(counts)
    }
}

/// Tied interpolation weights: one lambda vector per context order, indexed
/// by the count-range bucket of the conditioning context.
///
/// `bucket(c)` is the number of boundaries strictly below `c`, so a context
/// with count 0 always lands in bucket 0, whose lambda is pinned at 1 (full
/// back-off when the context is unseen).
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaBuckets {
    levels: Vec<LevelLambdas>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelLambdas {
    pub bounds: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl LevelLambdas {
    pub fn bucket(&self, count: f64) -> usize {
        self.bounds
            .partition_point(|b| *b < count)
            .min(self.bounds.len() - 1)
    }

    pub fn lambda(&self, count: f64) -> f64 {
        self.lambdas[self.bucket(count)]
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.lambdas.len() {
            return Err(Error::Config(format!(
                "{} boundaries but {} lambdas",
                self.bounds.len(),
                self.lambdas.len()
            )));
        }
        if self.bounds.first() != Some(&0.0) {
            return Err(Error::Config("first bucket boundary must be 0".into()));
        }
        if !self.bounds.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("bucket boundaries must be ascending".into()));
        }
        if !self.lambdas.iter().all(|l| (0.0..=1.0).contains(l)) {
            return Err(Error::Config("lambdas must lie in [0,1]".into()));
        }
        if self.lambdas[0] != 1.0 {
            return Err(Error::Config("zero-count bucket lambda must be 1".into()));
        }
        Ok(())
    }
}

/// Two-bucket tying: the pinned zero-count bucket plus one tied lambda
/// for every seen context. The right choice when counts are tiny, and the
/// only tying under which a context can never hop buckets as expected
/// counts move during reestimation.
pub fn two_bucket_bounds() -> Vec<f64> {
    vec![0.0, 1e-9]
}

/// Default count-range boundaries: powers of two up to 1024 plus a large
/// sentinel, mirroring the usual tying layout.
pub fn default_bounds() -> Vec<f64> {
    let mut b = vec![0.0, 1.0];
    let mut v = 2.0;
    while v <= 1024.0 {
        b.push(v);
        v *= 2.0;
    }
    b.push(10_000_000.0);
    b
}

impl LambdaBuckets {
    /// One lambda vector per order 0..=max_order, all initialized to 0.5
    /// except the pinned zero-count bucket.
    pub fn init(max_order: usize, bounds: &[f64]) -> Self {
        let levels = (0..=max_order)
            .map(|_| {
                let mut lambdas = vec![0.5; bounds.len()];
                lambdas[0] = 1.0;
                LevelLambdas {
                    bounds: bounds.to_vec(),
                    lambdas,
                }
            })
            .collect();
        Self { levels }
    }

    pub fn from_levels(levels: Vec<LevelLambdas>) -> Result<Self> {
        for l in &levels {
            l.validate()?;
        }
        Ok(Self { levels })
    }

    pub fn level(&self, k: usize) -> &LevelLambdas {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut LevelLambdas {
        &mut self.levels[k]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

struct Level {
    joint: BTreeMap<Key, f64>,
    ctx: BTreeMap<Key, f64>,
}

impl Level {
    fn build(counts: &EventCounts, order: usize) -> Self {
        let joint = counts.marginal(order);
        let mut ctx: BTreeMap<Key, f64> = BTreeMap::new();
        for (k, &w) in &joint {
            let key: Key = k[1..].to_vec().into_boxed_slice();
            *ctx.entry(key).or_insert(0.0) += w;
        }
        Level { joint, ctx }
    }

    fn ctx_count(&self, z: &[Sym]) -> f64 {
        self.ctx.get(z).copied().unwrap_or(0.0)
    }

    fn joint_count(&self, u: Sym, z: &[Sym]) -> f64 {
        let mut key = Vec::with_capacity(1 + z.len());
        key.push(u);
        key.extend_from_slice(z);
        self.joint.get(key.as_slice()).copied().unwrap_or(0.0)
    }
}

/// A trained deleted-interpolation model over a fixed predicted alphabet.
pub struct InterpModel {
    symtab: Arc<SymbolTable>,
    alphabet: Vec<Sym>,
    in_alphabet: HashMap<Sym, ()>,
    max_order: usize,
    levels: Vec<Level>,
    lambdas: LambdaBuckets,
    dev_counts: EventCounts,
}

impl InterpModel {
    pub fn new(
        symtab: Arc<SymbolTable>,
        alphabet: Vec<Sym>,
        dev_counts: EventCounts,
        lambdas: LambdaBuckets,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::Config("empty predicted alphabet".into()));
        }
        if lambdas.n_levels() != dev_counts.max_order() + 1 {
            return Err(Error::Config(format!(
                "{} lambda levels for order-{} counts",
                lambdas.n_levels(),
                dev_counts.max_order()
            )));
        }
        let levels = (0..=dev_counts.max_order())
            .map(|k| Level::build(&dev_counts, k))
            .collect();
        let in_alphabet = alphabet.iter().map(|&s| (s, ())).collect();
        Ok(Self {
            symtab,
            alphabet,
            in_alphabet,
            max_order: dev_counts.max_order(),
            levels,
            lambdas,
            dev_counts,
        })
    }

    pub fn symtab(&self) -> &Arc<SymbolTable> {
        &self.symtab
    }

    pub fn alphabet(&self) -> &[Sym] {
        &self.alphabet
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn lambdas(&self) -> &LambdaBuckets {
        &self.lambdas
    }

    pub fn dev_counts(&self) -> &EventCounts {
        &self.dev_counts
    }

    pub fn contains(&self, u: Sym) -> bool {
        self.in_alphabet.contains_key(&u)
    }

    /// Number of distinct (u, z1..zk) types at each order, 0..=n.
    pub fn type_census(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.joint.len()).collect()
    }

    /// Recursive linear interpolation down to the uniform distribution.
    /// Strictly positive for every `u` in the alphabet.
    pub fn prob(&self, u: Sym, ctx: &[Sym]) -> Result<f64> {
        if !self.contains(u) {
            return Err(Error::UnknownSymbol(self.symtab.name(u).to_string()));
        }
        debug_assert_eq!(ctx.len(), self.max_order);
        let mut p = 1.0 / self.alphabet.len() as f64;
        for k in 0..=self.max_order {
            let z = &ctx[..k];
            let level = &self.levels[k];
            let c = level.ctx_count(z);
            let lambda = self.lambdas.level(k).lambda(c);
            let f = if c > 0.0 { level.joint_count(u, z) / c } else { 0.0 };
            p = lambda * p + (1.0 - lambda) * f;
        }
        Ok(p)
    }

    /// Convenience for tests and plumbing: string-typed query. Unknown
    /// context symbols are treated as unseen (they back off fully).
    pub fn prob_str(&self, u: &str, ctx: &[&str]) -> Result<f64> {
        let u = self
            .symtab
            .get(u)
            .ok_or_else(|| Error::UnknownSymbol(u.to_string()))?;
        // Unseen context symbols can't collide with any table entry, so any
        // out-of-table id works; use an id beyond the table.
        let ctx: Vec<Sym> = ctx
            .iter()
            .map(|z| self.symtab.get(z).unwrap_or(u32::MAX))
            .collect();
        self.prob(u, &ctx)
    }

    /// Replace the maximal-order counts, keeping alphabet, lambdas and
    /// buckets fixed. This is the M-step of N-best reestimation.
    pub fn with_counts(&self, counts: EventCounts) -> Result<Self> {
        Self::new(
            Arc::clone(&self.symtab),
            self.alphabet.clone(),
            counts,
            self.lambdas.clone(),
        )
    }

    /// Replace the lambda tables, keeping counts.
    pub fn with_lambdas(&self, lambdas: LambdaBuckets) -> Result<Self> {
        Self::new(
            Arc::clone(&self.symtab),
            self.alphabet.clone(),
            self.dev_counts.clone(),
            lambdas,
        )
    }
}

/// Trace of the cross-validation log-likelihood after each EM iteration,
/// one vector per level.
pub type LlTrace = Vec<Vec<f64>>;

/// Estimate tied lambdas by EM on cross-validation counts, one level at a
/// time from the bottom up, a fixed number of iterations per level.
///
/// Bucket indices come from the development-context counts throughout:
/// they are the counts that define the deployed model's tying.
///
/// Returns the new lambdas and the per-level likelihood traces; the trace
/// for a level is evaluated with that level's lambdas current and all lower
/// levels already final.
pub fn em_lambdas(
    dev: &EventCounts,
    cv: &EventCounts,
    alphabet_size: usize,
    init: &LambdaBuckets,
    iterations: usize,
) -> Result<(LambdaBuckets, LlTrace)> {
    if dev.max_order() != cv.max_order() {
        return Err(Error::Config("dev/cv count orders differ".into()));
    }
    let n = dev.max_order();
    let dev_levels: Vec<Level> = (0..=n).map(|k| Level::build(dev, k)).collect();
    let cv_levels: Vec<BTreeMap<Key, f64>> = (0..=n).map(|k| cv.marginal(k)).collect();

    let mut lambdas = init.clone();
    let mut trace: LlTrace = Vec::with_capacity(n + 1);
    let uniform = 1.0 / alphabet_size as f64;

    // P_{k-1}(u | z1..z_{k-1}) with all levels < k final.
    let prob_below = |lambdas: &LambdaBuckets, upto: usize, u: Sym, ctx: &[Sym]| -> f64 {
        let mut p = uniform;
        for k in 0..upto {
            let z = &ctx[..k];
            let c = dev_levels[k].ctx_count(z);
            let lam = lambdas.level(k).lambda(c);
            let f = if c > 0.0 {
                dev_levels[k].joint_count(u, z) / c
            } else {
                0.0
            };
            p = lam * p + (1.0 - lam) * f;
        }
        p
    };

    for k in 0..=n {
        let mut level_trace = Vec::with_capacity(iterations);
        // Precompute per-event quantities that do not move during this
        // level's EM: the back-off probability, the top relative frequency
        // and the bucket index.
        struct Ev {
            w: f64,
            back: f64,
            f: f64,
            bucket: usize,
        }
        let events: Vec<Ev> = cv_levels[k]
            .iter()
            .map(|(key, &w)| {
                let (u, z) = (key[0], &key[1..]);
                let c = dev_levels[k].ctx_count(z);
                let f = if c > 0.0 {
                    dev_levels[k].joint_count(u, z) / c
                } else {
                    0.0
                };
                Ev {
                    w,
                    back: prob_below(&lambdas, k, u, z),
                    f,
                    bucket: lambdas.level(k).bucket(c),
                }
            })
            .collect();
        let n_buckets = lambdas.level(k).lambdas.len();
        for _ in 0..iterations {
            let mut post = vec![0.0f64; n_buckets];
            let mut mass = vec![0.0f64; n_buckets];
            let lam = &lambdas.level(k).lambdas;
            let mut ll = 0.0;
            for ev in &events {
                let l = lam[ev.bucket];
                let p = l * ev.back + (1.0 - l) * ev.f;
                ll += ev.w * p.ln();
                post[ev.bucket] += ev.w * (l * ev.back) / p;
                mass[ev.bucket] += ev.w;
            }
            level_trace.push(ll);
            let lam = &mut lambdas.level_mut(k).lambdas;
            for b in 1..n_buckets {
                // Buckets with no cv mass keep their initial value.
                if mass[b] > 0.0 {
                    lam[b] = (post[b] / mass[b]).clamp(0.0, 1.0);
                }
            }
        }
        trace.push(level_trace);
    }
    Ok((lambdas, trace))
}

/// Cross-validation log-likelihood of `cv` under a model built from `dev`
/// counts and the given lambdas. Used by tests and training reports.
pub fn cv_log_likelihood(
    dev: &EventCounts,
    cv: &EventCounts,
    alphabet_size: usize,
    lambdas: &LambdaBuckets,
) -> f64 {
    let n = dev.max_order();
    let dev_levels: Vec<Level> = (0..=n).map(|k| Level::build(dev, k)).collect();
    let uniform = 1.0 / alphabet_size as f64;
    let mut ll = 0.0;
    for (u, ctx, w) in cv.iter() {
        let mut p = uniform;
        for k in 0..=n {
            let z = &ctx[..k];
            let c = dev_levels[k].ctx_count(z);
            let lam = lambdas.level(k).lambda(c);
            let f = if c > 0.0 {
                dev_levels[k].joint_count(u, z) / c
            } else {
                0.0
            };
            p = lam * p + (1.0 - lam) * f;
        }
        ll += w * p.ln();
    }
    ll
}

/// On-disk descriptor for a deleted-interpolation model.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub main_counts_file: String,
    pub held_counts_file: String,
    pub max_order: usize,
    pub no_iterations: usize,
    pub lambdas: LambdaBuckets,
}

fn fmt_value_list(values: &[f64]) -> String {
    let mut s = format!("{}:", values.len());
    for v in values {
        let _ = write!(s, "__{}", v);
    }
    s
}

fn parse_value_list(payload: &str) -> Result<Vec<f64>> {
    let (n, rest) = payload
        .split_once(':')
        .ok_or_else(|| Error::Descriptor(format!("missing arity prefix in `{}`", payload)))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| Error::Descriptor(format!("bad arity in `{}`", payload)))?;
    let values: Vec<f64> = rest
        .split("__")
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Descriptor(format!("bad value `{}`", t)))
        })
        .collect::<Result<_>>()?;
    if values.len() != n {
        return Err(Error::Descriptor(format!(
            "declared {} values but found {}",
            n,
            values.len()
        )));
    }
    Ok(values)
}

impl Descriptor {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("## Stats_Del_Int descriptor file\n");
        let _ = writeln!(
            out,
            "Stats_Del_Int::_main_counts_file = {} ;",
            self.main_counts_file
        );
        let _ = writeln!(
            out,
            "Stats_Del_Int::_held_counts_file = {} ;",
            self.held_counts_file
        );
        let _ = writeln!(out, "Stats_Del_Int::_max_order = {} ;", self.max_order);
        let _ = writeln!(out, "Stats_Del_Int::_no_iterations = {} ;", self.no_iterations);
        for k in 0..self.lambdas.n_levels() {
            let level = self.lambdas.level(k);
            let _ = writeln!(
                out,
                "Stats_Del_Int::lambdas_level.{} = {} ;",
                k,
                fmt_value_list(&level.lambdas)
            );
            let _ = writeln!(
                out,
                "Stats_Del_Int::buckets_level.{} = {} ;",
                k,
                fmt_value_list(&level.bounds)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields: HashMap<String, String> = HashMap::new();
        // Entries are `name = payload ;`, possibly spanning lines.
        let mut pending = String::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            pending.push_str(line);
            if line.ends_with(';') {
                let stmt = pending.trim_end_matches(';').trim();
                if let Some((name, payload)) = stmt.split_once('=') {
                    fields.insert(name.trim().to_string(), payload.trim().to_string());
                } else {
                    return Err(Error::Descriptor(format!("bad statement `{}`", stmt)));
                }
                pending.clear();
            } else {
                pending.push(' ');
            }
        }
        if !pending.trim().is_empty() {
            return Err(Error::Descriptor("unterminated statement".into()));
        }

        let get = |key: &str| -> Result<&String> {
            fields
                .get(key)
                .ok_or_else(|| Error::Descriptor(format!("missing field `{}`", key)))
        };
        let max_order: usize = get("Stats_Del_Int::_max_order")?
            .parse()
            .map_err(|_| Error::Descriptor("bad _max_order".into()))?;
        let no_iterations: usize = get("Stats_Del_Int::_no_iterations")?
            .parse()
            .map_err(|_| Error::Descriptor("bad _no_iterations".into()))?;
        let mut levels = Vec::with_capacity(max_order + 1);
        for k in 0..=max_order {
            let lambdas = parse_value_list(get(&format!("Stats_Del_Int::lambdas_level.{}", k))?)?;
            let bounds = parse_value_list(get(&format!("Stats_Del_Int::buckets_level.{}", k))?)?;
            levels.push(LevelLambdas { bounds, lambdas });
        }
        let known = |name: &str| {
            name == "Stats_Del_Int::_main_counts_file"
                || name == "Stats_Del_Int::_held_counts_file"
                || name == "Stats_Del_Int::_max_order"
                || name == "Stats_Del_Int::_no_iterations"
                || name.starts_with("Stats_Del_Int::lambdas_level.")
                || name.starts_with("Stats_Del_Int::buckets_level.")
        };
        for name in fields.keys() {
            if !known(name) {
                eprintln!("warning: ignoring unknown descriptor key `{}`", name);
            }
        }
        Ok(Descriptor {
            main_counts_file: get("Stats_Del_Int::_main_counts_file")?.clone(),
            held_counts_file: get("Stats_Del_Int::_held_counts_file")?.clone(),
            max_order,
            no_iterations,
            lambdas: LambdaBuckets::from_levels(levels)?,
        })
    }
}
