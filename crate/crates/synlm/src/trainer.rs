//! Two-stage parameter reestimation: treebank initialization, first-stage
//! N-best EM over all three components, and the second-stage reestimation
//! of a separate left-to-right word predictor.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::decoder::{decode, normalized_weights, SearchParams};
use crate::error::{Error, Result};
use crate::interp::{default_bounds, em_lambdas, EventCounts, InterpModel, LambdaBuckets};
use crate::model::{
    derivation_of_tree, Component, Derivation, Event, ParserAction, SlmModel, Specials,
};
use crate::symtab::{Sym, SymbolTable};
use crate::treebank::HeadedTree;

/// Configuration for treebank initialization.
#[derive(Debug, Clone)]
pub struct InitConfig {
    /// Every n-th tree goes to the check set used for lambda estimation;
    /// 10 gives the usual 90/10 split.
    pub check_every: usize,
    /// EM iterations per interpolation level.
    pub lambda_iterations: usize,
    /// Count-range boundaries shared by all levels.
    pub bounds: Vec<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            check_every: 10,
            lambda_iterations: 20,
            bounds: default_bounds(),
        }
    }
}

fn collect_tree_symbols(
    tree: &HeadedTree,
    words: &mut BTreeSet<String>,
    tags: &mut BTreeSet<String>,
    labels: &mut BTreeSet<String>,
) {
    match tree {
        HeadedTree::Leaf { tag, word } => {
            words.insert(word.clone());
            tags.insert(tag.clone());
        }
        HeadedTree::Unary { label, child } => {
            labels.insert(label.clone());
            collect_tree_symbols(child, words, tags, labels);
        }
        HeadedTree::Binary { label, left, right, .. } => {
            labels.insert(label.clone());
            collect_tree_symbols(left, words, tags, labels);
            collect_tree_symbols(right, words, tags, labels);
        }
    }
}

fn route(ev: &Event) -> Component {
    ev.comp
}

/// Initialize all three components from binarized, head-annotated trees:
/// event counts tallied with weight one from the development portion,
/// interpolation weights EM-estimated on the check portion.
pub fn init_from_treebank(trees: &[HeadedTree], cfg: &InitConfig) -> Result<SlmModel> {
    if trees.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut tab = SymbolTable::new();
    let sp = Specials::intern(&mut tab);

    let mut word_set = BTreeSet::new();
    let mut tag_set = BTreeSet::new();
    let mut label_set = BTreeSet::new();
    for t in trees {
        collect_tree_symbols(t, &mut word_set, &mut tag_set, &mut label_set);
    }
    label_set.insert(crate::model::TOP.to_string());
    label_set.insert(crate::model::TOP_PRIME.to_string());
    // SE is not part of the closed tag set: the end-of-sentence tag is
    // assigned by definition, never drawn from the tagger.

    let words: Vec<Sym> = word_set
        .iter()
        .map(|w| tab.intern(w))
        .chain([sp.eos, sp.unk])
        .collect();
    let pos_tags: Vec<Sym> = tag_set.iter().map(|t| tab.intern(t)).collect();
    let nt_labels: Vec<Sym> = label_set.iter().map(|l| tab.intern(l)).collect();
    // The root labels take part only in the constraint-forced adjoins, so
    // the open-choice action vocabulary ranges over the ordinary labels.
    let mut action_alphabet: Vec<Sym> = vec![ParserAction::Null.intern_name(&mut tab)];
    for &nt in &nt_labels {
        if nt == sp.top || nt == sp.top_prime {
            continue;
        }
        for action in [
            ParserAction::Unary(nt),
            ParserAction::AdjoinLeft(nt),
            ParserAction::AdjoinRight(nt),
        ] {
            action_alphabet.push(action.intern_name(&mut tab));
        }
    }
    action_alphabet.push(ParserAction::AdjoinRight(sp.top_prime).intern_name(&mut tab));
    action_alphabet.push(ParserAction::AdjoinRight(sp.top).intern_name(&mut tab));

    let mut dev: [EventCounts; 3] = [
        EventCounts::new(4),
        EventCounts::new(3),
        EventCounts::new(4),
    ];
    let mut check = [
        EventCounts::new(4),
        EventCounts::new(3),
        EventCounts::new(4),
    ];
    let in_alphabet = {
        let sets: [std::collections::HashSet<Sym>; 3] = [
            words.iter().copied().collect(),
            pos_tags.iter().copied().collect(),
            action_alphabet.iter().copied().collect(),
        ];
        sets
    };
    for (i, tree) in trees.iter().enumerate() {
        let derivation = derivation_of_tree(tree, &mut tab, &sp)?;
        let to_check = cfg.check_every > 0 && (i + 1) % cfg.check_every == 0;
        let target = if to_check { &mut check } else { &mut dev };
        for ev in &derivation {
            let slot = match route(ev) {
                Component::Predictor => 0,
                Component::Tagger => 1,
                Component::Parser => 2,
            };
            // Count only events the component can predict; an alphabet
            // that excludes some forced move must not see its mass.
            if in_alphabet[slot].contains(&ev.u) {
                target[slot].add(ev.u, &ev.ctx, 1.0)?;
            }
        }
    }

    let alphabets: [Vec<Sym>; 3] = [words.clone(), pos_tags.clone(), action_alphabet];
    let mut lambdas = Vec::with_capacity(3);
    for i in 0..3 {
        let init = LambdaBuckets::init(dev[i].max_order(), &cfg.bounds);
        let trained = if check[i].is_empty() {
            init
        } else {
            em_lambdas(
                &dev[i],
                &check[i],
                alphabets[i].len(),
                &init,
                cfg.lambda_iterations,
            )?
            .0
        };
        lambdas.push(trained);
    }

    let tab = Arc::new(tab);
    let [pred_dev, tag_dev, pars_dev] = dev;
    let [words_a, tags_a, actions_a] = alphabets;
    let mut lambdas = lambdas.into_iter();
    let predictor = InterpModel::new(Arc::clone(&tab), words_a, pred_dev, lambdas.next().unwrap())?;
    let tagger = InterpModel::new(Arc::clone(&tab), tags_a, tag_dev, lambdas.next().unwrap())?;
    let parser = InterpModel::new(Arc::clone(&tab), actions_a, pars_dev, lambdas.next().unwrap())?;
    SlmModel::new(Arc::clone(&tab), sp, predictor, tagger, parser, pos_tags, nt_labels)
}

/// Build the trigram special case of the model: the parser vocabulary
/// holds only the null move, so every parse is right-branching, and a
/// single merged tag plays the part of both POS tags and labels. The
/// induced word process is then a deleted-interpolation model over the two
/// preceding words.
pub fn init_trigram_equivalent(corpus: &[Vec<String>], cfg: &InitConfig) -> Result<SlmModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut tab = SymbolTable::new();
    let sp = Specials::intern(&mut tab);
    let merged = tab.intern("X");

    let mut word_set = BTreeSet::new();
    for sent in corpus {
        for w in sent {
            word_set.insert(w.clone());
        }
    }
    let words: Vec<Sym> = word_set
        .iter()
        .map(|w| tab.intern(w))
        .chain([sp.eos, sp.unk])
        .collect();
    let null_sym = ParserAction::Null.intern_name(&mut tab);

    let mut dev = [
        EventCounts::new(4),
        EventCounts::new(3),
        EventCounts::new(4),
    ];
    let mut check = [
        EventCounts::new(4),
        EventCounts::new(3),
        EventCounts::new(4),
    ];
    for (i, sent) in corpus.iter().enumerate() {
        if sent.is_empty() {
            return Err(Error::EmptySentence);
        }
        // Every word is a root-only tree; the unique derivation of that
        // forest is the right-branching parse.
        let forest: Vec<HeadedTree> = sent
            .iter()
            .map(|w| HeadedTree::Leaf {
                tag: "X".to_string(),
                word: w.clone(),
            })
            .collect();
        let derivation = crate::model::derivation_of_forest(&forest, &mut tab, &sp)?;
        let to_check = cfg.check_every > 0 && (i + 1) % cfg.check_every == 0;
        let target = if to_check { &mut check } else { &mut dev };
        for ev in &derivation {
            match route(ev) {
                Component::Predictor => target[0].add(ev.u, &ev.ctx, 1.0)?,
                Component::Tagger => {
                    if ev.u == merged {
                        target[1].add(ev.u, &ev.ctx, 1.0)?;
                    }
                }
                Component::Parser => {
                    if ev.u == null_sym {
                        target[2].add(ev.u, &ev.ctx, 1.0)?;
                    }
                }
            }
        }
    }

    let [pred_dev, tag_dev, pars_dev] = dev;
    let pred_lambdas = {
        let init = LambdaBuckets::init(4, &cfg.bounds);
        let mut lams = if check[0].is_empty() {
            init
        } else {
            em_lambdas(&pred_dev, &check[0], words.len(), &init, cfg.lambda_iterations)?.0
        };
        // With one merged tag, the tag-only context levels (orders 1 and 3)
        // duplicate their word-bearing neighbors except at the sentence
        // boundary; skipping them makes the induced word process exactly a
        // deleted-interpolation model over the two preceding words.
        for level in [1usize, 3] {
            for l in lams.level_mut(level).lambdas.iter_mut() {
                *l = 1.0;
            }
        }
        lams
    };
    let tab = Arc::new(tab);
    let predictor = InterpModel::new(Arc::clone(&tab), words, pred_dev, pred_lambdas)?;
    let tagger = InterpModel::new(
        Arc::clone(&tab),
        vec![merged],
        tag_dev,
        LambdaBuckets::init(3, &cfg.bounds),
    )?;
    let parser = InterpModel::new(
        Arc::clone(&tab),
        vec![null_sym],
        pars_dev,
        LambdaBuckets::init(4, &cfg.bounds),
    )?;
    SlmModel::new(
        Arc::clone(&tab),
        sp,
        predictor,
        tagger,
        parser,
        vec![merged],
        vec![merged],
    )
}

/// The complete parses that survived pruning for one sentence, stored as
/// derivations so they can be rescored under later parameter values.
#[derive(Debug, Clone)]
pub struct ParseSet {
    pub derivations: Vec<Derivation>,
}

/// Per-iteration training metrics.
#[derive(Debug, Clone)]
pub struct EmReport {
    /// Sum over sentences of ln of the summed probability of the
    /// surviving parses (the deficient-likelihood training objective).
    pub likelihood: f64,
    pub sentences: usize,
    pub skipped: usize,
    /// Distinct word-predictor event types per context order.
    pub predictor_census: Vec<usize>,
}

/// E-step sampling: decode each sentence and keep the surviving complete
/// parses. Sentences with no surviving parse yield `None`.
pub fn decode_parse_sets(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
) -> Vec<Option<ParseSet>> {
    corpus
        .iter()
        .map(|words| match decode(model, words, params) {
            Ok(result) => Some(ParseSet {
                derivations: result.completes.iter().map(|h| h.events()).collect(),
            }),
            Err(_) => None,
        })
        .collect()
}

/// One EM update on frozen parse sets: posteriors under the current model,
/// expected counts accumulated per component, maximal-order counts replaced
/// by the expectations. Lambdas and buckets stay fixed.
pub fn em_update_from_sets(
    model: &SlmModel,
    sets: &[Option<ParseSet>],
) -> Result<(SlmModel, EmReport)> {
    let mut acc = [
        EventCounts::new(model.predictor.max_order()),
        EventCounts::new(model.tagger.max_order()),
        EventCounts::new(model.parser.max_order()),
    ];
    let mut likelihood = 0.0;
    let mut skipped = 0;
    let mut sentences = 0;
    for set in sets {
        let set = match set {
            Some(s) if !s.derivations.is_empty() => s,
            _ => {
                skipped += 1;
                continue;
            }
        };
        sentences += 1;
        let logps: Vec<f64> = set
            .derivations
            .iter()
            .map(|d| model.joint_logprob(d))
            .collect::<Result<_>>()?;
        let max = logps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logps.iter().map(|lp| (lp - max).exp()).sum();
        likelihood += max + z.ln();
        let posteriors: Vec<f64> = logps.iter().map(|lp| (lp - max).exp() / z).collect();
        debug_assert!((posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (derivation, q) in set.derivations.iter().zip(&posteriors) {
            for ev in derivation {
                let (slot, in_alpha) = match route(ev) {
                    Component::Predictor => (0, model.predictor.contains(ev.u)),
                    Component::Tagger => (1, model.tagger.contains(ev.u)),
                    Component::Parser => (2, model.parser.contains(ev.u)),
                };
                if in_alpha {
                    acc[slot].add(ev.u, &ev.ctx, *q)?;
                }
            }
        }
    }
    for counts in &mut acc {
        counts.prune_below(1e-12);
    }
    let [pred, tagg, pars] = acc;
    let mut next = SlmModel::new(
        Arc::clone(&model.symtab),
        model.specials,
        model.predictor.with_counts(pred)?,
        model.tagger.with_counts(tagg)?,
        model.parser.with_counts(pars)?,
        model.pos_tags.clone(),
        model.nt_labels.clone(),
    )?;
    next.l2r_predictor = model
        .l2r_predictor
        .as_ref()
        .map(|m| m.with_counts(m.dev_counts().clone()))
        .transpose()?;
    let census = next.predictor.type_census();
    Ok((
        next,
        EmReport {
            likelihood,
            sentences,
            skipped,
            predictor_census: census,
        },
    ))
}

/// One full N-best EM iteration: re-decode the corpus under the current
/// parameters (the sampling strategy is the pruning strategy) and apply the
/// count update.
pub fn nbest_em_iteration(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
) -> Result<(SlmModel, EmReport)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let sets = decode_parse_sets(model, corpus, params);
    em_update_from_sets(model, &sets)
}

/// Fixed word-prediction mixtures for one sentence: at each position the
/// predicted word and the (weight, context) rows of the surviving parses.
#[derive(Debug, Clone)]
pub struct PredictionMixtures {
    pub positions: Vec<(Sym, Vec<(f64, Vec<Sym>)>)>,
}

/// Decode once with the structure model and freeze the per-position
/// mixtures used by the left-to-right word predictor.
pub fn decode_prediction_mixtures(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
) -> Vec<Option<PredictionMixtures>> {
    corpus
        .iter()
        .map(|words| {
            let result = match decode(model, words, params) {
                Ok(r) => r,
                Err(_) => return None,
            };
            let mut positions = Vec::with_capacity(words.len() + 1);
            for (k, hyps) in result.per_position.iter().enumerate() {
                let target = if k < words.len() {
                    words[k]
                } else {
                    model.specials.eos
                };
                let refs: Vec<&crate::decoder::Hypothesis> = hyps.iter().collect();
                let weights = normalized_weights(&refs);
                let rows = refs
                    .iter()
                    .zip(weights)
                    .map(|(h, w)| (w, h.prefix.predictor_ctx(&model.specials).to_vec()))
                    .collect();
                positions.push((target, rows));
            }
            Some(PredictionMixtures { positions })
        })
        .collect()
}

/// Seed the separate left-to-right predictor by copying the structure
/// predictor, if it does not exist yet.
pub fn ensure_l2r_predictor(model: &mut SlmModel) -> Result<()> {
    if model.l2r_predictor.is_none() {
        model.l2r_predictor = Some(model.predictor.with_counts(
            model.predictor.dev_counts().clone(),
        )?);
    }
    Ok(())
}

/// One EM update of the left-to-right word predictor on frozen mixtures.
/// The mixture weights stay fixed (they come from the structure model);
/// only the emission counts move. Returns the updated model and the
/// mixture log-likelihood of the corpus under the incoming parameters.
pub fn l2r_em_update(
    model: &SlmModel,
    mixtures: &[Option<PredictionMixtures>],
) -> Result<(SlmModel, f64)> {
    let l2r = model
        .l2r_predictor
        .as_ref()
        .ok_or_else(|| Error::Config("second stage requires the seeded word predictor".into()))?;
    let mut acc = EventCounts::new(l2r.max_order());
    let mut likelihood = 0.0;
    for mixture in mixtures.iter().flatten() {
        for (word, rows) in &mixture.positions {
            let mut total = 0.0;
            let mut terms = Vec::with_capacity(rows.len());
            for (rho, ctx) in rows {
                let p = l2r.prob(*word, ctx)?;
                terms.push((rho * p, ctx));
                total += rho * p;
            }
            likelihood += total.ln();
            for (term, ctx) in terms {
                acc.add(*word, ctx, term / total)?;
            }
        }
    }
    acc.prune_below(1e-12);
    let mut next = SlmModel::new(
        Arc::clone(&model.symtab),
        model.specials,
        model.predictor.with_counts(model.predictor.dev_counts().clone())?,
        model.tagger.with_counts(model.tagger.dev_counts().clone())?,
        model.parser.with_counts(model.parser.dev_counts().clone())?,
        model.pos_tags.clone(),
        model.nt_labels.clone(),
    )?;
    next.l2r_predictor = Some(l2r.with_counts(acc)?);
    Ok((next, likelihood))
}

/// One full second-stage iteration: freeze mixtures under the structure
/// model, update the left-to-right predictor.
pub fn l2r_reestimation_iteration(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
) -> Result<(SlmModel, f64, usize)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mixtures = decode_prediction_mixtures(model, corpus, params);
    let skipped = mixtures.iter().filter(|m| m.is_none()).count();
    let (next, likelihood) = l2r_em_update(model, &mixtures)?;
    Ok((next, likelihood, skipped))
}
