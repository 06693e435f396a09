//! File-level glue behind the command suite: corpus and model directory
//! I/O, and one function per subcommand returning its stdout payload.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::decoder::SearchParams;
use crate::error::{Error, Result};
use crate::eval::{self, NgramLm, PplVariant};
use crate::interp::{
    default_bounds, em_lambdas, Descriptor, EventCounts, InterpModel, LambdaBuckets,
};
use crate::lattice::{
    astar_decode, nbest_sample_and_rank, path_score, read_lattice, split_links, viterbi_best,
    Lattice, LatticeLm, LinkNgramLm, NgramLatticeLm, PeekMode, RescoreParams, SlmLatticeLm,
    SplitInterpLm, SplitTable,
};
use crate::model::{load_model, replay, save_model, SlmModel, BOS, EOS, PAD, UNK};
use crate::symtab::{Sym, SymbolTable};
use crate::trainer::{
    decode_parse_sets, em_update_from_sets, ensure_l2r_predictor, init_from_treebank,
    l2r_reestimation_iteration, InitConfig,
};
use crate::treebank::{
    parse_bracketed, preprocess, BinarizationRuleSet, HeadedTree, PercolationRuleSet,
};

/// Order-preserving parallel map over a shared immutable context.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let mut results: Vec<Vec<R>> = Vec::with_capacity(jobs);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for part in items.chunks(chunk) {
            let f = &f;
            handles.push(scope.spawn(move || part.iter().map(f).collect::<Vec<R>>()));
        }
        for h in handles {
            results.push(h.join().expect("worker panicked"));
        }
    });
    results.into_iter().flatten().collect()
}

/// One sentence per line, whitespace tokens; blank lines skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path)?;
    let corpus: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

fn map_sentences(model: &SlmModel, corpus: &[Vec<String>]) -> Vec<Vec<Sym>> {
    corpus
        .iter()
        .map(|s| s.iter().map(|w| model.word_sym(w)).collect())
        .collect()
}

fn load_rules(
    head_rules: Option<&Path>,
    bin_rules: Option<&Path>,
) -> Result<(PercolationRuleSet, BinarizationRuleSet)> {
    let heads = match head_rules {
        Some(p) => PercolationRuleSet::parse(&std::fs::read_to_string(p)?)?,
        None => PercolationRuleSet::builtin(),
    };
    let bins = match bin_rules {
        Some(p) => BinarizationRuleSet::parse(&std::fs::read_to_string(p)?)?,
        None => BinarizationRuleSet::builtin(),
    };
    Ok((heads, bins))
}

/// `preprocess`: bracketed trees in, binarized trees and derivations out.
pub fn cmd_preprocess(
    input: &Path,
    head_rules: Option<&Path>,
    bin_rules: Option<&Path>,
) -> Result<String> {
    let (heads, bins) = load_rules(head_rules, bin_rules)?;
    let text = std::fs::read_to_string(input)?;
    let raw = parse_bracketed(&text)?;
    let mut trees_out = String::new();
    let mut deriv_out = String::new();
    let mut tab = SymbolTable::new();
    let sp = crate::model::Specials::intern(&mut tab);
    let mut count = 0usize;
    for tree in raw {
        let binary = preprocess(tree, &heads, &bins)?;
        trees_out.push_str(&binary.render());
        trees_out.push('\n');
        let derivation = crate::model::derivation_of_tree(&binary, &mut tab, &sp)?;
        deriv_out.push_str(&crate::model::derivation_to_text(&derivation, &tab));
        deriv_out.push('\n');
        count += 1;
    }
    let stem = input.to_string_lossy();
    let stem = stem.strip_suffix(".trees").unwrap_or(&stem);
    let trees_path = PathBuf::from(format!("{}.bin.trees", stem));
    let deriv_path = PathBuf::from(format!("{}.deriv", stem));
    std::fs::write(&trees_path, trees_out)?;
    std::fs::write(&deriv_path, deriv_out)?;
    Ok(format!(
        "trees={}\nderivations={}\nout_trees={}\nout_derivations={}\n",
        count,
        count,
        trees_path.display(),
        deriv_path.display()
    ))
}

/// A generic deleted-interpolation model on disk: descriptor, development
/// counts and the predicted alphabet.
pub fn save_interp_dir(
    dir: &Path,
    tab: &SymbolTable,
    model: &InterpModel,
    iterations: usize,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let desc = Descriptor {
        main_counts_file: "model.counts".to_string(),
        held_counts_file: "-".to_string(),
        max_order: model.max_order(),
        no_iterations: iterations,
        lambdas: model.lambdas().clone(),
    };
    std::fs::write(dir.join("model.desc"), desc.to_text())?;
    std::fs::write(dir.join("model.counts"), model.dev_counts().to_text(tab))?;
    let mut vocab = String::new();
    for &s in model.alphabet() {
        vocab.push_str(tab.name(s));
        vocab.push('\n');
    }
    std::fs::write(dir.join("alphabet.vocab"), vocab)?;
    Ok(())
}

pub fn load_interp_dir(dir: &Path) -> Result<(Arc<SymbolTable>, InterpModel)> {
    let mut tab = SymbolTable::new();
    for s in [BOS, EOS, UNK, PAD] {
        tab.intern(s);
    }
    let desc = Descriptor::from_text(&std::fs::read_to_string(dir.join("model.desc"))?)?;
    let alphabet: Vec<Sym> = std::fs::read_to_string(dir.join("alphabet.vocab"))?
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| tab.intern(l))
        .collect();
    let counts = EventCounts::from_text(
        &std::fs::read_to_string(dir.join(&desc.main_counts_file))?,
        desc.max_order,
        &mut tab,
    )?;
    let tab = Arc::new(tab);
    let model = InterpModel::new(Arc::clone(&tab), alphabet, counts, desc.lambdas)?;
    Ok((tab, model))
}

/// Gather word n-gram events from a corpus: each word and the sentence-end
/// token predicted from the `order` preceding words, padded at the left.
fn ngram_counts(
    corpus: &[Vec<String>],
    order: usize,
    tab: &mut SymbolTable,
    check_every: usize,
) -> Result<(EventCounts, EventCounts, Vec<Sym>)> {
    let bos = tab.intern(BOS);
    let eos = tab.intern(EOS);
    let pad = tab.intern(PAD);
    let unk = tab.intern(UNK);
    let mut words: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for sent in corpus {
        for w in sent {
            words.insert(w.clone());
        }
    }
    let alphabet: Vec<Sym> = words
        .iter()
        .map(|w| tab.intern(w))
        .chain([eos, unk])
        .collect();
    let mut dev = EventCounts::new(order);
    let mut cv = EventCounts::new(order);
    for (i, sent) in corpus.iter().enumerate() {
        let syms: Vec<Sym> = sent.iter().map(|w| tab.intern(w)).collect();
        let target = if check_every > 0 && (i + 1) % check_every == 0 {
            &mut cv
        } else {
            &mut dev
        };
        for k in 0..=syms.len() {
            let u = if k < syms.len() { syms[k] } else { eos };
            let mut ctx = Vec::with_capacity(order);
            for d in 0..order {
                let idx = k as isize - 1 - d as isize;
                ctx.push(if idx >= 0 {
                    syms[idx as usize]
                } else if idx == -1 {
                    bos
                } else {
                    pad
                });
            }
            target.add(u, &ctx, 1.0)?;
        }
    }
    Ok((dev, cv, alphabet))
}

pub struct TrainInterpArgs<'a> {
    pub corpus: Option<&'a Path>,
    pub ngram: usize,
    pub dev: Option<&'a Path>,
    pub cv: Option<&'a Path>,
    pub max_order: Option<usize>,
    pub iterations: usize,
    pub coarse_buckets: bool,
    pub out: &'a Path,
}

/// `train-interp`: estimate tied interpolation weights by EM and write the
/// model directory.
pub fn cmd_train_interp(args: &TrainInterpArgs) -> Result<String> {
    let mut tab = SymbolTable::new();
    let bounds = if args.coarse_buckets {
        crate::interp::two_bucket_bounds()
    } else {
        default_bounds()
    };
    let (dev, cv, alphabet) = match (args.corpus, args.dev, args.cv) {
        (Some(corpus), None, None) => {
            let sentences = read_corpus(corpus)?;
            let order = args.ngram.saturating_sub(1);
            ngram_counts(&sentences, order, &mut tab, 10)?
        }
        (None, Some(dev_path), Some(cv_path)) => {
            let order = args.max_order.ok_or_else(|| {
                Error::Config("--max-order is required with raw count files".into())
            })?;
            let dev = EventCounts::from_text(&std::fs::read_to_string(dev_path)?, order, &mut tab)?;
            let cv = EventCounts::from_text(&std::fs::read_to_string(cv_path)?, order, &mut tab)?;
            let mut alphabet: Vec<Sym> = dev.iter().chain(cv.iter()).map(|(u, _, _)| u).collect();
            alphabet.sort_unstable();
            alphabet.dedup();
            (dev, cv, alphabet)
        }
        _ => {
            return Err(Error::Config(
                "provide either --corpus or both --dev and --cv".into(),
            ))
        }
    };
    let init = LambdaBuckets::init(dev.max_order(), &bounds);
    let (lambdas, trace) = em_lambdas(&dev, &cv, alphabet.len(), &init, args.iterations)?;
    let final_ll = trace
        .last()
        .and_then(|t| t.last())
        .copied()
        .unwrap_or(f64::NAN);
    let tab = Arc::new(tab);
    let model = InterpModel::new(Arc::clone(&tab), alphabet, dev, lambdas)?;
    save_interp_dir(args.out, &tab, &model, args.iterations)?;
    Ok(format!(
        "out={}\nmax_order={}\ncv_log_likelihood={}\ntypes={}\n",
        args.out.display(),
        model.max_order(),
        final_ll,
        model.dev_counts().len()
    ))
}

/// `init-slm`: treebank to model directory.
pub fn cmd_init_slm(
    treebank: &Path,
    out: &Path,
    cfg: &InitConfig,
    head_rules: Option<&Path>,
    bin_rules: Option<&Path>,
) -> Result<String> {
    let (heads, bins) = load_rules(head_rules, bin_rules)?;
    let text = std::fs::read_to_string(treebank)?;
    // `.bin.trees` files are already binarized and head-annotated; plain
    // treebank files go through the full preprocessing.
    let annotated = treebank.to_string_lossy().ends_with(".bin.trees");
    let trees: Vec<HeadedTree> = if annotated {
        crate::treebank::parse_annotated(&text)?
    } else {
        parse_bracketed(&text)?
            .into_iter()
            .map(|t| preprocess(t, &heads, &bins))
            .collect::<Result<_>>()?
    };
    let model = init_from_treebank(&trees, cfg)?;
    save_model(&model, out)?;
    Ok(format!(
        "out={}\ntrees={}\nwords={}\npos={}\nnt={}\n",
        out.display(),
        trees.len(),
        model.predictor.alphabet().len(),
        model.pos_tags.len(),
        model.nt_labels.len()
    ))
}

pub struct TrainSlmArgs<'a> {
    pub model: &'a Path,
    pub corpus: &'a Path,
    pub stage: u8,
    pub iterations: usize,
    pub out: &'a Path,
    pub search: SearchParams,
}

/// `train-slm`: N-best EM (stage 1) or the left-to-right word predictor
/// reestimation (stage 2), with a checkpoint directory and a metrics line
/// per iteration.
pub fn cmd_train_slm(args: &TrainSlmArgs) -> Result<String> {
    let mut model = load_model(args.model)?;
    let corpus_text = read_corpus(args.corpus)?;
    let corpus = map_sentences(&model, &corpus_text);
    let mut out = String::new();
    match args.stage {
        1 => {
            for iter in 1..=args.iterations {
                let sets = decode_parse_sets(&model, &corpus, &args.search);
                let (next, report) = em_update_from_sets(&model, &sets)?;
                model = next;
                let ppl = eval::perplexity(&model, &corpus, &args.search, None)?;
                let census: Vec<String> = report
                    .predictor_census
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                out.push_str(&format!(
                    "stage=1 iteration={} l_n={} l2r_ppl_dev={} sentences={} skipped={} types={}\n",
                    iter,
                    report.likelihood,
                    ppl.l2r_ppl,
                    report.sentences,
                    report.skipped,
                    census.join(",")
                ));
                let ckpt = args.out.join(format!("stage1-iter{:03}", iter));
                save_model(&model, &ckpt)?;
            }
        }
        2 => {
            ensure_l2r_predictor(&mut model)?;
            for iter in 1..=args.iterations {
                let (next, likelihood, skipped) =
                    l2r_reestimation_iteration(&model, &corpus, &args.search)?;
                model = next;
                let ppl = eval::perplexity(&model, &corpus, &args.search, None)?;
                out.push_str(&format!(
                    "stage=2 iteration={} l_l2r={} l2r_ppl_dev={} skipped={}\n",
                    iter, likelihood, ppl.l2r_ppl, skipped
                ));
                let ckpt = args.out.join(format!("stage2-iter{:03}", iter));
                save_model(&model, &ckpt)?;
            }
        }
        s => return Err(Error::Config(format!("unknown training stage {}", s))),
    }
    save_model(&model, args.out)?;
    out.push_str(&format!("out={}\n", args.out.display()));
    Ok(out)
}

pub struct PplArgs<'a> {
    pub model: &'a Path,
    pub corpus: &'a Path,
    pub variant: PplVariant,
    pub fudge: f64,
    pub lambda: Option<f64>,
    pub trigram: Option<&'a Path>,
    pub depth_csv: Option<&'a Path>,
    pub search: SearchParams,
    pub jobs: usize,
}

/// `ppl`: perplexity report over a corpus, optionally interpolated with a
/// trigram directory and with an optional depth histogram dump.
pub fn cmd_ppl(args: &PplArgs) -> Result<String> {
    let model = load_model(args.model)?;
    let corpus_text = read_corpus(args.corpus)?;
    let corpus = map_sentences(&model, &corpus_text);
    let mut search = args.search.clone();
    search.fudge = args.fudge;

    let trigram = args
        .trigram
        .map(load_interp_dir)
        .transpose()?;
    struct SentenceTotals {
        n: usize,
        l2r: f64,
        top: f64,
        bot: f64,
        sum: f64,
        interp: f64,
    }
    let indices: Vec<usize> = (0..corpus.len()).collect();
    let per_sentence: Vec<Result<SentenceTotals>> = parallel_map(&indices, args.jobs, |&i| {
        let words = &corpus[i];
        let sent_text = &corpus_text[i];
        let ev = eval::eval_sentence(&model, words, &search)?;
        let mut interp = 0.0;
        if let Some((tab, tri)) = &trigram {
            let lambda = args.lambda.unwrap_or(0.36);
            let lm = NgramLm {
                model: tri,
                bos: tab.get(BOS).expect("interned at load"),
                pad: tab.get(PAD).expect("interned at load"),
            };
            // The trigram lives in its own symbol table.
            let to_tri = |w: &str| -> Result<Sym> {
                match tab.get(w).filter(|s| tri.contains(*s)) {
                    Some(s) => Ok(s),
                    None => tab
                        .get(UNK)
                        .filter(|s| tri.contains(*s))
                        .ok_or_else(|| Error::UnknownSymbol(w.to_string())),
                }
            };
            for (k, slm_lp) in ev.l2r_logps.iter().enumerate() {
                let target = if k < sent_text.len() {
                    to_tri(&sent_text[k])?
                } else {
                    tab.get(EOS).expect("interned at load")
                };
                let history: Vec<Sym> = sent_text[..k]
                    .iter()
                    .map(|w| to_tri(w))
                    .collect::<Result<_>>()?;
                let tri_p = lm.prob(target, &history)?;
                let q = eval::interpolate_with_trigram(slm_lp.exp(), tri_p, lambda);
                interp += q.ln();
            }
        }
        Ok(SentenceTotals {
            n: words.len() + 1,
            l2r: ev.l2r_logps.iter().sum(),
            top: ev.top_logps.iter().sum(),
            bot: ev.bot_logps.iter().sum(),
            sum: ev.sum_logp,
            interp,
        })
    });
    let mut n = 0usize;
    let (mut l2r, mut top, mut bot, mut sum, mut interp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in per_sentence {
        let t = r?;
        n += t.n;
        l2r += t.l2r;
        top += t.top;
        bot += t.bot;
        sum += t.sum;
        interp += t.interp;
    }
    let ppl = |total: f64| (-total / n as f64).exp();
    let report = eval::PplReport {
        l2r_ppl: ppl(l2r),
        top_ppl: ppl(top),
        bot_ppl: ppl(bot),
        sum_ppl: ppl(sum),
        words: n,
        sentences: corpus.len(),
        interpolated_ppl: trigram.as_ref().map(|_| ppl(interp)),
    };
    let mut out = report.render();
    out.push_str(&format!("variant={:?}\n", args.variant));
    out.push_str(&format!("ppl={}\n", report.of(args.variant)));
    if let Some(csv) = args.depth_csv {
        let depth = eval::depth_stats(&model, &corpus, &search)?;
        std::fs::write(csv, depth.to_csv())?;
        out.push_str(&format!("expected_depth={}\n", depth.expected_depth));
        out.push_str(&format!("depth_csv={}\n", csv.display()));
    }
    Ok(out)
}

/// `parse`: emit the best complete parse per sentence.
pub fn cmd_parse(
    model_dir: &Path,
    corpus_path: &Path,
    search: &SearchParams,
    jobs: usize,
) -> Result<String> {
    let model = load_model(model_dir)?;
    let corpus_text = read_corpus(corpus_path)?;
    let corpus = map_sentences(&model, &corpus_text);
    let lines: Vec<Result<String>> = parallel_map(&corpus, jobs, |words| {
        let result = crate::decoder::decode(&model, words, search)?;
        let best = result.best().expect("decode yields a complete parse");
        let tree = replay(&best.events(), &model.symtab)?;
        Ok(format!("{}\t{}", best.logp, tree.render()))
    });
    let mut out = String::new();
    for line in lines {
        out.push_str(&line?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescoreMode {
    Viterbi,
    Astar,
    Peek,
    PeekPrune,
    Normalized,
}

impl std::str::FromStr for RescoreMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "viterbi" => Ok(RescoreMode::Viterbi),
            "astar" => Ok(RescoreMode::Astar),
            "peek" => Ok(RescoreMode::Peek),
            "peek-prune" => Ok(RescoreMode::PeekPrune),
            "normalized" => Ok(RescoreMode::Normalized),
            other => Err(Error::Config(format!("unknown rescore mode `{}`", other))),
        }
    }
}

pub struct RescoreArgs<'a> {
    pub lattices: &'a [PathBuf],
    pub model: Option<&'a Path>,
    pub mode: RescoreMode,
    pub lambda: f64,
    pub split_table: Option<&'a Path>,
    pub apply_split: bool,
    pub params: RescoreParams,
    pub search: SearchParams,
    pub nbest: Option<usize>,
    pub jobs: usize,
}

/// `rescore`: best path per lattice under the chosen mode, with optional
/// N-best rank diagnostics.
pub fn cmd_rescore(args: &RescoreArgs) -> Result<String> {
    let model = args.model.map(load_model).transpose()?;
    if model.is_none() && args.mode != RescoreMode::Viterbi {
        return Err(Error::Config(
            "this rescore mode needs --model for the structured language model".into(),
        ));
    }
    let table = match args.split_table {
        Some(p) => SplitTable::parse(&std::fs::read_to_string(p)?)?,
        None => SplitTable::builtin(),
    };
    let run_one = |path: &PathBuf| -> Result<String> {
        let mut lattice = read_lattice(&std::fs::read_to_string(path)?)?;
        if args.apply_split {
            lattice = split_links(&lattice, &table)?;
        }
        let mut out = format!("lattice={}\n", path.display());
        match args.mode {
            RescoreMode::Viterbi => {
                let scores: Vec<f64> = lattice.links().iter().map(|l| l.ng_logp).collect();
                let (best, score) = viterbi_best(&lattice, &scores, &args.params)?;
                out.push_str(&format!("mode=viterbi score={}\n", score));
                out.push_str(&format!("words={}\n", lattice.path_words(&best).join(" ")));
            }
            mode => {
                let model = model.as_ref().expect("checked above");
                let peek = match mode {
                    RescoreMode::Astar => PeekMode::Plain,
                    RescoreMode::Peek => PeekMode::Peek,
                    RescoreMode::PeekPrune => PeekMode::PeekPrune,
                    RescoreMode::Normalized => PeekMode::Normalized,
                    RescoreMode::Viterbi => unreachable!(),
                };
                let slm = SlmLatticeLm::new(model, args.search.clone(), peek);
                let mut lm: Box<dyn LatticeLm> = if args.lambda > 0.0 {
                    Box::new(SplitInterpLm {
                        lambda: args.lambda,
                        new_lm: slm,
                        table: table.clone(),
                    })
                } else {
                    Box::new(slm)
                };
                if let Some(n) = args.nbest {
                    let diag = nbest_sample_and_rank(&lattice, lm.as_mut(), &args.params, n)?;
                    out.push_str(&format!(
                        "mode={:?} score={} steps={}\n",
                        mode, diag.astar.score, diag.astar.extension_steps
                    ));
                    out.push_str(&format!(
                        "words={}\n",
                        lattice.path_words(&diag.astar.path).join(" ")
                    ));
                    out.push_str(&format!("nbest_rank={}\n", diag.rank));
                    if let Some(kind) = diag.failure {
                        out.push_str(&format!("failure={:?}\n", kind));
                    }
                } else {
                    let result = astar_decode(&lattice, lm.as_mut(), &args.params)?;
                    out.push_str(&format!(
                        "mode={:?} score={} steps={}\n",
                        mode, result.score, result.extension_steps
                    ));
                    out.push_str(&format!(
                        "words={}\n",
                        lattice.path_words(&result.path).join(" ")
                    ));
                }
            }
        }
        Ok(out)
    };
    let results: Vec<Result<String>> = parallel_map(args.lattices, args.jobs, run_one);
    let mut out = String::new();
    for r in results {
        out.push_str(&r?);
    }
    Ok(out)
}

/// `wer`: per-line and aggregate word error rate between two files.
pub fn cmd_wer(hyp_path: &Path, ref_path: &Path) -> Result<String> {
    let hyp_text = std::fs::read_to_string(hyp_path)?;
    let ref_text = std::fs::read_to_string(ref_path)?;
    let hyps: Vec<&str> = hyp_text.lines().collect();
    let refs: Vec<&str> = ref_text.lines().collect();
    if hyps.len() != refs.len() {
        return Err(Error::Config(format!(
            "hypothesis file has {} lines, reference {}",
            hyps.len(),
            refs.len()
        )));
    }
    let mut total_errors = 0.0;
    let mut total_words = 0usize;
    let mut out = String::new();
    for (i, (h, r)) in hyps.iter().zip(&refs).enumerate() {
        let h_toks: Vec<&str> = h.split_whitespace().collect();
        let r_toks: Vec<&str> = r.split_whitespace().collect();
        let rate = eval::wer(&h_toks, &r_toks);
        out.push_str(&format!("line={} wer={}\n", i + 1, rate));
        total_errors += rate * r_toks.len() as f64;
        total_words += r_toks.len();
    }
    let overall = if total_words == 0 {
        0.0
    } else {
        total_errors / total_words as f64
    };
    out.push_str(&format!("wer={}\n", overall));
    out.push_str(&format!("reference_words={}\n", total_words));
    Ok(out)
}

/// Keep the lattice path formats exercised: `path_score` is re-exported
/// through the pipeline for scripting use.
pub fn score_path_in_lattice(
    lattice: &Lattice,
    path: &[crate::lattice::LinkId],
    params: &RescoreParams,
) -> Result<f64> {
    let mut lm = LinkNgramLm;
    path_score(lattice, path, &mut lm, params)
}

/// Per-link scores from an interpolation-model directory, for scripting.
pub fn ngram_lattice_lm<'a>(model: &'a InterpModel) -> NgramLatticeLm<'a> {
    NgramLatticeLm::new(model, BOS, PAD, UNK)
}
