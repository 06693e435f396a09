//! Syntax-aware language modeling toolkit.
//!
//! The crate covers the full pipeline of a structured language model:
//!
//! - [`treebank`]: bracketed-tree parsing, headword percolation and
//!   binarization;
//! - [`interp`]: deleted-interpolation conditional models with EM-trained
//!   tied weights;
//! - [`model`]: the word-parse prefix state machine, the three conditional
//!   components (word predictor, tagger, parser), and the derivations
//!   that encode a sentence with its parse;
//! - [`decoder`]: synchronous multi-stack pruned search over partial parses;
//! - [`eval`]: word-level probability assignment, perplexity variants,
//!   depth statistics and word error rate;
//! - [`trainer`]: treebank initialization and N-best EM reestimation;
//! - [`lattice`]: word lattices, Viterbi and A* rescoring with
//!   compensation heuristics;
//! - [`pipeline`]: the file-level glue behind the `synlm` command suite.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `synlm` binary ties the pipeline together as a command suite.

pub mod decoder;
pub mod error;
pub mod eval;
pub mod interp;
pub mod lattice;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod symtab;
pub mod trainer;
pub mod treebank;

pub use error::{Error, Result};
