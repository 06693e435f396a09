//! Word-level probability assignment and evaluation: perplexity variants,
//! trigram interpolation, depth statistics and word error rate.

use crate::decoder::{decode, normalized_weights, DecodeResult, Hypothesis, SearchParams};
use crate::error::{Error, Result};
use crate::interp::InterpModel;
use crate::model::SlmModel;
use crate::symtab::Sym;

/// P(w | W_k): the predictor rows of the surviving parses, mixed with the
/// normalized prefix weights. Uses the separate left-to-right predictor
/// when the model has one.
pub fn word_prob_l2r(model: &SlmModel, hyps: &[&Hypothesis], word: Sym) -> Result<f64> {
    let weights = normalized_weights(hyps);
    let mut p = 0.0;
    for (hyp, rho) in hyps.iter().zip(weights) {
        p += rho * model.l2r_word_prob(&hyp.prefix, word)?;
    }
    Ok(p)
}

/// Perplexity variants over one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PplVariant {
    /// Proper left-to-right assignment mixing over the parse sets.
    L2R,
    /// Conditioning on the top-scoring surviving complete parse.
    Top,
    /// Conditioning on the bottom-scoring surviving complete parse.
    Bot,
    /// Deficient whole-sentence sum over surviving complete parses.
    Sum,
}

impl std::str::FromStr for PplVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L2R" => Ok(PplVariant::L2R),
            "TOP" => Ok(PplVariant::Top),
            "BOT" => Ok(PplVariant::Bot),
            "SUM" => Ok(PplVariant::Sum),
            other => Err(Error::Config(format!("unknown perplexity variant `{}`", other))),
        }
    }
}

/// All perplexity variants, computed over the same word count.
#[derive(Debug, Clone)]
pub struct PplReport {
    pub l2r_ppl: f64,
    pub top_ppl: f64,
    pub bot_ppl: f64,
    pub sum_ppl: f64,
    pub words: usize,
    pub sentences: usize,
    /// Interpolated left-to-right perplexity, when a background model and
    /// weight were supplied.
    pub interpolated_ppl: Option<f64>,
}

impl PplReport {
    pub fn of(&self, variant: PplVariant) -> f64 {
        match variant {
            PplVariant::L2R => self.l2r_ppl,
            PplVariant::Top => self.top_ppl,
            PplVariant::Bot => self.bot_ppl,
            PplVariant::Sum => self.sum_ppl,
        }
    }

    /// Aligned table plus machine-readable key=value lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10} {:>12}\n", "variant", "ppl"));
        out.push_str(&format!("{:<10} {:>12.4}\n", "L2R", self.l2r_ppl));
        out.push_str(&format!("{:<10} {:>12.4}\n", "TOP", self.top_ppl));
        out.push_str(&format!("{:<10} {:>12.4}\n", "BOT", self.bot_ppl));
        out.push_str(&format!("{:<10} {:>12.4}\n", "SUM", self.sum_ppl));
        if let Some(p) = self.interpolated_ppl {
            out.push_str(&format!("{:<10} {:>12.4}\n", "INTERP", p));
        }
        out.push_str(&format!("l2r_ppl={}\n", self.l2r_ppl));
        out.push_str(&format!("top_ppl={}\n", self.top_ppl));
        out.push_str(&format!("bot_ppl={}\n", self.bot_ppl));
        out.push_str(&format!("sum_ppl={}\n", self.sum_ppl));
        if let Some(p) = self.interpolated_ppl {
            out.push_str(&format!("interp_ppl={}\n", p));
        }
        out.push_str(&format!("words={}\n", self.words));
        out.push_str(&format!("sentences={}\n", self.sentences));
        out
    }
}

/// Simple linear interpolation between a background model and the
/// structured model's word probability.
pub fn interpolate_with_trigram(slm_prob: f64, trigram_prob: f64, lambda: f64) -> f64 {
    lambda * trigram_prob + (1.0 - lambda) * slm_prob
}

/// A plain deleted-interpolation n-gram used as the interpolation partner:
/// context is the preceding `order` words, most recent first.
pub struct NgramLm<'a> {
    pub model: &'a InterpModel,
    pub bos: Sym,
    pub pad: Sym,
}

impl<'a> NgramLm<'a> {
    /// P(w | history), history = full sentence prefix without boundary
    /// padding; the model's context order decides how much of it is used.
    pub fn prob(&self, word: Sym, history: &[Sym]) -> Result<f64> {
        let order = self.model.max_order();
        let mut ctx = Vec::with_capacity(order);
        for i in 0..order {
            let idx = history.len() as isize - 1 - i as isize;
            ctx.push(if idx >= 0 {
                history[idx as usize]
            } else if idx == -1 {
                self.bos
            } else {
                self.pad
            });
        }
        self.model.prob(word, &ctx)
    }
}

/// Per-sentence evaluation pieces, exposed so training loops can reuse the
/// decode work.
pub struct SentenceEval {
    /// ln P(w_{k+1}|W_k) per position under the left-to-right mixture.
    pub l2r_logps: Vec<f64>,
    pub top_logps: Vec<f64>,
    pub bot_logps: Vec<f64>,
    /// ln of the summed probability of the surviving complete parses.
    pub sum_logp: f64,
    pub result: DecodeResult,
}

/// Decode one sentence and collect the per-position probabilities all
/// perplexity variants need.
pub fn eval_sentence(
    model: &SlmModel,
    words: &[Sym],
    params: &SearchParams,
) -> Result<SentenceEval> {
    let result = decode(model, words, params)?;
    let mut l2r_logps = Vec::with_capacity(words.len() + 1);
    for (k, hyps) in result.per_position.iter().enumerate() {
        let target = if k < words.len() {
            words[k]
        } else {
            model.specials.eos
        };
        let refs: Vec<&Hypothesis> = hyps.iter().collect();
        let p = word_prob_l2r(model, &refs, target)?;
        l2r_logps.push(p.ln());
    }
    let best = result.best().expect("decode guarantees a complete parse");
    let worst = result.worst().expect("decode guarantees a complete parse");
    let top_logps = best.predictor_logprobs(model)?;
    let bot_logps = worst.predictor_logprobs(model)?;
    let completes: Vec<&Hypothesis> = result.completes.iter().collect();
    let sum_logp = crate::decoder::logsumexp_scores(&completes);
    Ok(SentenceEval {
        l2r_logps,
        top_logps,
        bot_logps,
        sum_logp,
        result,
    })
}

/// Optional interpolation setup for [`perplexity`].
pub struct Interpolation<'a> {
    pub trigram: NgramLm<'a>,
    pub lambda: f64,
}

/// Evaluate a corpus. The fudge factor lives in `params.fudge`; it scales
/// the tagger/parser factors inside hypothesis scores only, so the word
/// probability assignment stays normalized. The end-of-sentence token is
/// predicted like any word and counted in N.
pub fn perplexity(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
    interpolation: Option<&Interpolation>,
) -> Result<PplReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut n = 0usize;
    let mut l2r = 0.0;
    let mut top = 0.0;
    let mut bot = 0.0;
    let mut sum = 0.0;
    let mut interp_sum = 0.0;
    for words in corpus {
        let ev = eval_sentence(model, words, params)?;
        n += words.len() + 1;
        l2r += ev.l2r_logps.iter().sum::<f64>();
        top += ev.top_logps.iter().sum::<f64>();
        bot += ev.bot_logps.iter().sum::<f64>();
        sum += ev.sum_logp;
        if let Some(cfg) = interpolation {
            for (k, slm_lp) in ev.l2r_logps.iter().enumerate() {
                let target = if k < words.len() {
                    words[k]
                } else {
                    model.specials.eos
                };
                let tri = cfg.trigram.prob(target, &words[..k])?;
                let q = interpolate_with_trigram(slm_lp.exp(), tri, cfg.lambda);
                interp_sum += q.ln();
            }
        }
    }
    let ppl = |total: f64| (-total / n as f64).exp();
    Ok(PplReport {
        l2r_ppl: ppl(l2r),
        top_ppl: ppl(top),
        bot_ppl: ppl(bot),
        sum_ppl: ppl(sum),
        words: n,
        sentences: corpus.len(),
        interpolated_ppl: interpolation.map(|_| ppl(interp_sum)),
    })
}

/// Depth histogram and expected depth. The depth of a prefix is the
/// distance, counted back from the prediction point, of the second most
/// recent exposed headword; the first-word prediction has depth 1.
#[derive(Debug, Clone)]
pub struct DepthDistribution {
    /// P(d|W) averaged over all prediction positions, indexed by depth.
    pub histogram: Vec<f64>,
    /// Expected depth over positions with a full two-head context
    /// (k >= 1); the three-word-context baseline sits at exactly 2.
    pub expected_depth: f64,
    pub positions: usize,
}

impl DepthDistribution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,mass\n");
        for (d, m) in self.histogram.iter().enumerate() {
            if *m > 0.0 {
                out.push_str(&format!("{},{}\n", d, m));
            }
        }
        out
    }
}

fn prefix_depth(hyp: &Hypothesis, model: &SlmModel) -> usize {
    let sp = model.specials;
    let h1 = hyp.prefix.h_minus_1(&sp);
    if h1.word == sp.pad {
        return 1;
    }
    (hyp.prefix.k() - h1.pos) as usize + 1
}

/// Depth statistics over a corpus.
pub fn depth_stats(
    model: &SlmModel,
    corpus: &[Vec<Sym>],
    params: &SearchParams,
) -> Result<DepthDistribution> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut histogram: Vec<f64> = Vec::new();
    let mut expected_sum = 0.0;
    let mut expected_positions = 0usize;
    let mut positions = 0usize;
    for words in corpus {
        let result = decode(model, words, params)?;
        for (k, hyps) in result.per_position.iter().enumerate() {
            let refs: Vec<&Hypothesis> = hyps.iter().collect();
            let weights = normalized_weights(&refs);
            let mut per_position: Vec<(usize, f64)> = Vec::with_capacity(refs.len());
            for (hyp, rho) in refs.iter().zip(weights) {
                per_position.push((prefix_depth(hyp, model), rho));
            }
            let mass: f64 = per_position.iter().map(|(_, r)| r).sum();
            debug_assert!((mass - 1.0).abs() < 1e-9);
            positions += 1;
            for &(d, rho) in &per_position {
                if histogram.len() <= d {
                    histogram.resize(d + 1, 0.0);
                }
                histogram[d] += rho;
            }
            if k >= 1 {
                expected_positions += 1;
                for &(d, rho) in &per_position {
                    expected_sum += d as f64 * rho;
                }
            }
        }
    }
    for m in &mut histogram {
        *m /= positions as f64;
    }
    Ok(DepthDistribution {
        histogram,
        expected_depth: expected_sum / expected_positions.max(1) as f64,
        positions,
    })
}

/// Word error rate by Levenshtein alignment: substitutions, insertions and
/// deletions all cost one; the rate is errors over the reference length.
pub fn wer(hypothesis: &[&str], reference: &[&str]) -> f64 {
    let errors = levenshtein(hypothesis, reference);
    if reference.is_empty() {
        return if hypothesis.is_empty() { 0.0 } else { 1.0 };
    }
    errors as f64 / reference.len() as f64
}

fn levenshtein(a: &[&str], b: &[&str]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        curr[0] = i;
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            curr[j] = (prev[j] + 1).min(curr[j - 1] + 1).min(prev[j - 1] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{init_from_treebank, init_trigram_equivalent, InitConfig};
    use crate::treebank::parse_annotated;

    fn text_corpus(sentences: &[&str]) -> Vec<Vec<String>> {
        sentences
            .iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn toy_model() -> SlmModel {
        let texts = [
            "(S~runs~V~1 (NP~dog~N~1 (D the) (N dog)) (V runs))",
            "(S~runs~V~1 (NP~cat~N~1 (D the) (N cat)) (V runs))",
            "(S~sees~V~1 (NP~cat~N~1 (D a) (N cat)) (VP~sees~V~0 (V sees) (NP~dog~N~1 (D a) (N dog))))",
            "(S~sees~V~1 (N dog) (VP~sees~V~0 (V sees) (N cat)))",
            "(NP~dog~N~1 (D the) (N dog))",
            "(S~runs~V~1 (N cat) (V runs))",
        ];
        let trees: Vec<_> = texts.iter().flat_map(|t| parse_annotated(t).unwrap()).collect();
        init_from_treebank(&trees, &InitConfig::default()).unwrap()
    }

    fn sentence(model: &SlmModel, s: &str) -> Vec<Sym> {
        s.split_whitespace().map(|w| model.word_sym(w)).collect()
    }

    #[test]
    fn word_probs_sum_to_one_at_every_position() {
        let model = toy_model();
        let words = sentence(&model, "the dog sees a cat");
        let params = SearchParams {
            max_stack_depth: 5,
            ..SearchParams::default()
        };
        let result = decode(&model, &words, &params).unwrap();
        for hyps in &result.per_position {
            let refs: Vec<&Hypothesis> = hyps.iter().collect();
            let mut total = 0.0;
            for &w in model.predictor.alphabet() {
                total += word_prob_l2r(&model, &refs, w).unwrap();
            }
            assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
        }
    }

    #[test]
    fn single_parse_reduces_to_the_predictor_row() {
        let corpus = text_corpus(&["u v", "v u"]);
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        let words = sentence(&model, "u v");
        let result = decode(&model, &words, &SearchParams::default()).unwrap();
        let hyps: Vec<&Hypothesis> = result.per_position[1].iter().collect();
        assert_eq!(hyps.len(), 1);
        let w = words[1];
        let mixed = word_prob_l2r(&model, &hyps, w).unwrap();
        let direct = model.predictor_prob(&hyps[0].prefix, w).unwrap();
        assert!((mixed - direct).abs() < 1e-15);
    }

    #[test]
    fn fudge_one_is_bit_identical_to_unfudged() {
        let model = toy_model();
        let corpus: Vec<Vec<Sym>> = vec![
            sentence(&model, "the dog runs"),
            sentence(&model, "a cat sees the dog"),
        ];
        let base = perplexity(&model, &corpus, &SearchParams::default(), None).unwrap();
        let fudged = perplexity(
            &model,
            &corpus,
            &SearchParams {
                fudge: 1.0,
                ..SearchParams::default()
            },
            None,
        )
        .unwrap();
        assert_eq!(base.l2r_ppl, fudged.l2r_ppl);
        assert_eq!(base.sum_ppl, fudged.sum_ppl);
    }

    #[test]
    fn uniform_predictor_gives_vocabulary_size_ppl() {
        use crate::interp::{LambdaBuckets, LevelLambdas};
        let model = toy_model();
        // Pin every predictor lambda at 1: full back-off to uniform.
        let levels = (0..=model.predictor.max_order())
            .map(|_| LevelLambdas {
                bounds: vec![0.0, 10_000_000.0],
                lambdas: vec![1.0, 1.0],
            })
            .collect();
        let mut uniform = init_from_treebank(
            &{
                let texts = ["(S~runs~V~1 (N dog) (V runs))"];
                texts.iter().flat_map(|t| parse_annotated(t).unwrap()).collect::<Vec<_>>()
            },
            &InitConfig::default(),
        )
        .unwrap();
        uniform.predictor = uniform
            .predictor
            .with_lambdas(LambdaBuckets::from_levels(levels).unwrap())
            .unwrap();
        let v = uniform.predictor.alphabet().len() as f64;
        let corpus = vec![sentence(&uniform, "dog runs")];
        let report = perplexity(&uniform, &corpus, &SearchParams::default(), None).unwrap();
        assert!((report.l2r_ppl - v).abs() < 1e-9, "{} vs {}", report.l2r_ppl, v);
        let _ = model;
    }

    #[test]
    fn interpolation_endpoints_recover_each_model() {
        assert_eq!(interpolate_with_trigram(0.25, 0.5, 1.0), 0.5);
        assert_eq!(interpolate_with_trigram(0.25, 0.5, 0.0), 0.25);
    }

    #[test]
    fn ppl_invariant_under_sentence_permutation() {
        let model = toy_model();
        let a = vec![
            sentence(&model, "the dog runs"),
            sentence(&model, "a cat sees the dog"),
            sentence(&model, "the cat runs"),
        ];
        let mut b = a.clone();
        b.reverse();
        let pa = perplexity(&model, &a, &SearchParams::default(), None).unwrap();
        let pb = perplexity(&model, &b, &SearchParams::default(), None).unwrap();
        assert!((pa.l2r_ppl - pb.l2r_ppl).abs() < 1e-12);
        assert!((pa.sum_ppl - pb.sum_ppl).abs() < 1e-12);
    }

    #[test]
    fn trigram_reduction_has_expected_depth_two() {
        let corpus = text_corpus(&["u v w", "w v u", "u u v w"]);
        let model = init_trigram_equivalent(&corpus, &InitConfig::default()).unwrap();
        let eval_corpus: Vec<Vec<Sym>> =
            corpus.iter().map(|s| s.iter().map(|w| model.word_sym(w)).collect()).collect();
        let d = depth_stats(&model, &eval_corpus, &SearchParams::default()).unwrap();
        assert!((d.expected_depth - 2.0).abs() < 1e-9, "{}", d.expected_depth);
        // First-word predictions put mass at depth 1 in the histogram.
        assert!(d.histogram[1] > 0.0);
        let total: f64 = d.histogram.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_model_reaches_deeper_than_two() {
        let model = toy_model();
        let corpus = vec![
            sentence(&model, "the dog sees a cat"),
            sentence(&model, "a cat sees the dog"),
        ];
        let d = depth_stats(&model, &corpus, &SearchParams::default()).unwrap();
        assert!(d.expected_depth > 2.0, "{}", d.expected_depth);
        let total: f64 = d.histogram.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wer_worked_example_scores_forty_percent() {
        let reference: Vec<&str> = "UP UPSTATE NEW YORK SOMEWHERE UH OVER OVER HUGE AREAS"
            .split_whitespace()
            .collect();
        let hypothesis: Vec<&str> = "UPSTATE NEW YORK SOMEWHERE UH ALL ALL THE HUGE AREAS"
            .split_whitespace()
            .collect();
        let rate = wer(&hypothesis, &reference);
        assert!((rate - 0.4).abs() < 1e-15, "{}", rate);
    }

    #[test]
    fn wer_edges() {
        assert_eq!(wer(&["a", "b"], &["a", "b"]), 0.0);
        assert_eq!(wer(&[], &["a", "b", "c"]), 1.0);
        assert_eq!(wer(&[], &[]), 0.0);
    }

    #[test]
    fn sum_variant_is_deficient_under_pruning() {
        // Pruned sum over parses underestimates the unpruned sum.
        let model = toy_model();
        let words = sentence(&model, "the dog runs");
        let tight = SearchParams {
            max_stack_depth: 1,
            ..SearchParams::default()
        };
        let loose = SearchParams {
            max_stack_depth: 10_000,
            stack_logp_threshold: f64::INFINITY,
            rel_threshold: f64::INFINITY,
            caches_enabled: false,
            ..SearchParams::default()
        };
        let p_tight = eval_sentence(&model, &words, &tight).unwrap().sum_logp;
        let p_loose = eval_sentence(&model, &words, &loose).unwrap().sum_logp;
        assert!(p_tight <= p_loose + 1e-12);
    }
}
