use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use synlm::decoder::SearchParams;
use synlm::eval::PplVariant;
use synlm::interp::default_bounds;
use synlm::lattice::RescoreParams;
use synlm::pipeline::{
    cmd_init_slm, cmd_parse, cmd_ppl, cmd_preprocess, cmd_rescore, cmd_train_interp,
    cmd_train_slm, cmd_wer, PplArgs, RescoreArgs, RescoreMode, TrainInterpArgs, TrainSlmArgs,
};
use synlm::trainer::InitConfig;

/// Syntax-aware language modeling toolkit.
#[derive(Parser)]
#[command(name = "synlm", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Maximum hypotheses per decoder stack.
    #[arg(long, default_value_t = 10)]
    stack_depth: usize,
    /// Log-probability spread allowed within a stack.
    #[arg(long, default_value_t = 100.0)]
    stack_logp: f64,
    /// Relative threshold of the second pruning step.
    #[arg(long, default_value_t = 100.0)]
    rel_threshold: f64,
    /// Disable the cached tag/action lists and their hard pruning.
    #[arg(long)]
    no_cache: bool,
}

impl SearchArgs {
    fn to_params(&self) -> SearchParams {
        SearchParams {
            max_stack_depth: self.stack_depth,
            stack_logp_threshold: self.stack_logp,
            rel_threshold: self.rel_threshold,
            caches_enabled: !self.no_cache,
            ..SearchParams::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Bracketed treebank in, binarized trees and derivations out.
    Preprocess {
        input: PathBuf,
        /// Head percolation rule table (defaults to the built-in one).
        #[arg(long)]
        head_rules: Option<PathBuf>,
        /// Binarization scheme table (defaults to the built-in one).
        #[arg(long)]
        bin_rules: Option<PathBuf>,
    },
    /// Train a generic deleted-interpolation model.
    TrainInterp {
        /// Plain corpus; events are word n-grams of the given order.
        #[arg(long, conflicts_with_all = ["dev", "cv"])]
        corpus: Option<PathBuf>,
        /// N-gram order used with --corpus (3 = trigram).
        #[arg(long, default_value_t = 3)]
        ngram: usize,
        /// Raw development count file (with --cv and --max-order).
        #[arg(long, requires = "cv")]
        dev: Option<PathBuf>,
        /// Raw cross-validation count file.
        #[arg(long, requires = "dev")]
        cv: Option<PathBuf>,
        /// Context length of raw count files.
        #[arg(long)]
        max_order: Option<usize>,
        /// EM iterations per interpolation level.
        #[arg(long, default_value_t = 20)]
        iters: usize,
        /// Use the coarse count ranges suited to small corpora.
        #[arg(long)]
        coarse_buckets: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initialize a structured language model from a treebank.
    InitSlm {
        treebank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// EM iterations per interpolation level.
        #[arg(long, default_value_t = 20)]
        iters: usize,
        /// Every n-th tree goes to the check set (0 disables the split).
        #[arg(long, default_value_t = 10)]
        check_every: usize,
        /// Use the coarse count ranges suited to small corpora.
        #[arg(long)]
        coarse_buckets: bool,
        #[arg(long)]
        head_rules: Option<PathBuf>,
        #[arg(long)]
        bin_rules: Option<PathBuf>,
    },
    /// Reestimate model parameters on a corpus.
    TrainSlm {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// 1 = N-best EM over all components; 2 = left-to-right word
        /// predictor reestimation.
        #[arg(long)]
        stage: u8,
        #[arg(long)]
        iters: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Perplexity report over a corpus.
    Ppl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Which variant the `ppl=` line reports: L2R, TOP, BOT or SUM.
        #[arg(long, default_value = "L2R")]
        variant: String,
        /// Exponent on the tagger/parser factors in hypothesis scores.
        #[arg(long, default_value_t = 1.0)]
        fudge: f64,
        /// Interpolation weight on the trigram (used with --trigram).
        #[arg(long)]
        lambda: Option<f64>,
        /// Interpolation-model directory produced by train-interp.
        #[arg(long)]
        trigram: Option<PathBuf>,
        /// Write the depth histogram as CSV.
        #[arg(long)]
        depth_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Emit the best complete parse per sentence.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Force all words under a single root constituent.
        #[arg(long)]
        single_root: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Rescore word lattices.
    Rescore {
        lattices: Vec<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// viterbi, astar, peek, peek-prune or normalized.
        #[arg(long, default_value = "astar")]
        mode: String,
        #[arg(long, default_value_t = 16.0)]
        lm_weight: f64,
        #[arg(long, default_value_t = 0.0)]
        log_ip: f64,
        #[arg(long, default_value_t = 0.5)]
        log_comp: f64,
        #[arg(long, default_value_t = 0.0)]
        log_final: f64,
        /// Weight on the first-pass lattice scores in the interpolation.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Split-table file (defaults to the built-in contractions).
        #[arg(long)]
        split_table: Option<PathBuf>,
        /// Apply link splitting before rescoring.
        #[arg(long)]
        split: bool,
        /// A* stack depth threshold.
        #[arg(long, default_value_t = 30)]
        stack_depth: usize,
        /// A* stack log-probability spread threshold.
        #[arg(long, default_value_t = 100.0)]
        stack_logp: f64,
        /// Sample the N best first-pass paths and rank the search output.
        #[arg(long)]
        nbest: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Word error rate between a hypothesis file and a reference file.
    Wer {
        hypothesis: PathBuf,
        reference: PathBuf,
    },
}

fn run(cmd: Cmd) -> synlm::Result<String> {
    match cmd {
        Cmd::Preprocess {
            input,
            head_rules,
            bin_rules,
        } => cmd_preprocess(&input, head_rules.as_deref(), bin_rules.as_deref()),
        Cmd::TrainInterp {
            corpus,
            ngram,
            dev,
            cv,
            max_order,
            iters,
            coarse_buckets,
            out,
        } => cmd_train_interp(&TrainInterpArgs {
            corpus: corpus.as_deref(),
            ngram,
            dev: dev.as_deref(),
            cv: cv.as_deref(),
            max_order,
            iterations: iters,
            coarse_buckets,
            out: &out,
        }),
        Cmd::InitSlm {
            treebank,
            out,
            iters,
            check_every,
            coarse_buckets,
            head_rules,
            bin_rules,
        } => {
            let cfg = InitConfig {
                check_every,
                lambda_iterations: iters,
                bounds: if coarse_buckets {
                    synlm::interp::two_bucket_bounds()
                } else {
                    default_bounds()
                },
            };
            cmd_init_slm(
                &treebank,
                &out,
                &cfg,
                head_rules.as_deref(),
                bin_rules.as_deref(),
            )
        }
        Cmd::TrainSlm {
            model,
            corpus,
            stage,
            iters,
            out,
            search,
        } => cmd_train_slm(&TrainSlmArgs {
            model: &model,
            corpus: &corpus,
            stage,
            iterations: iters,
            out: &out,
            search: search.to_params(),
        }),
        Cmd::Ppl {
            model,
            corpus,
            variant,
            fudge,
            lambda,
            trigram,
            depth_csv,
            jobs,
            search,
        } => {
            let variant: PplVariant = variant.parse()?;
            cmd_ppl(&PplArgs {
                model: &model,
                corpus: &corpus,
                variant,
                fudge,
                lambda,
                trigram: trigram.as_deref(),
                depth_csv: depth_csv.as_deref(),
                search: search.to_params(),
                jobs,
            })
        }
        Cmd::Parse {
            model,
            corpus,
            single_root,
            jobs,
            search,
        } => {
            let mut params = search.to_params();
            params.single_root = single_root;
            cmd_parse(&model, &corpus, &params, jobs)
        }
        Cmd::Rescore {
            lattices,
            model,
            mode,
            lm_weight,
            log_ip,
            log_comp,
            log_final,
            lambda,
            split_table,
            split,
            stack_depth,
            stack_logp,
            nbest,
            jobs,
        } => {
            let mode: RescoreMode = mode.parse()?;
            cmd_rescore(&RescoreArgs {
                lattices: &lattices,
                model: model.as_deref(),
                mode,
                lambda,
                split_table: split_table.as_deref(),
                apply_split: split,
                params: RescoreParams {
                    lm_weight,
                    log_ip,
                    log_comp,
                    log_final,
                    stack_depth,
                    stack_logp,
                },
                search: SearchParams::default(),
                nbest,
                jobs,
            })
        }
        Cmd::Wer {
            hypothesis,
            reference,
        } => cmd_wer(&hypothesis, &reference),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help and --version print normally.
            if e.use_stderr() {
                eprint!("{}", e);
                return ExitCode::from(1);
            }
            print!("{}", e);
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.cmd) {
        Ok(out) => {
            print!("{}", out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
