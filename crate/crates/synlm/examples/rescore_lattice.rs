//! Word-lattice rescoring: the Viterbi baseline over first-pass scores,
//! A* with the compensation heuristic driven by the structured model, link
//! splitting for tokenization mismatches, and N-best rank diagnostics.
//!
//! Run with `cargo run -p synlm --example rescore_lattice`.

use synlm::decoder::SearchParams;
use synlm::interp::two_bucket_bounds;
use synlm::lattice::{
    admissible_comp, astar_decode, nbest_sample_and_rank, read_lattice, split_links,
    viterbi_best, write_lattice, PeekMode, RescoreParams, SlmLatticeLm, SplitInterpLm,
    SplitTable,
};
use synlm::trainer::{init_trigram_equivalent, InitConfig};

const LATTICE: &str = "\
SLMLAT 1
NODES 6
0 0
1 0.4
2 0.4
3 0.9
4 0.9
5 1.5
LINKS 7
0 0 1 we -0.8 -0.7
1 0 2 he -0.9 -0.6
2 1 3 don't -1.6 -1.2
3 2 3 don't -1.5 -1.3
4 1 4 do -2.6 -1.9
5 3 5 stop -1.2 -0.8
6 4 5 stop -1.1 -0.9
START 0
END 5
";

fn main() -> synlm::Result<()> {
    let lattice = read_lattice(LATTICE)?;
    println!(
        "lattice: {} nodes, {} links, {} complete paths",
        lattice.nodes().len(),
        lattice.links().len(),
        lattice.paths().len()
    );

    let params = RescoreParams {
        lm_weight: 4.0,
        log_ip: 0.1,
        ..RescoreParams::default()
    };

    // First-pass baseline: Viterbi over the link-local scores.
    let scores: Vec<f64> = lattice.links().iter().map(|l| l.ng_logp).collect();
    let (path, score) = viterbi_best(&lattice, &scores, &params)?;
    println!(
        "viterbi baseline: {:?} (score {:.3})",
        lattice.path_words(&path),
        score
    );

    // The rescoring model works in the split tokenization, so the lattice
    // links are split first; scores move to the second half of each pair.
    let table = SplitTable::builtin();
    let split = split_links(&lattice, &table)?;
    println!(
        "\nafter link splitting: {} links, paths preserved: {}",
        split.links().len(),
        split.paths().len() == lattice.paths().len()
    );
    print!("{}", write_lattice(&split));

    let corpus: Vec<Vec<String>> = [
        "we do n't stop",
        "he do n't stop",
        "we do stop",
        "we do n't go",
    ]
    .iter()
    .map(|s| s.split_whitespace().map(str::to_string).collect())
    .collect();
    let cfg = InitConfig {
        bounds: two_bucket_bounds(),
        ..InitConfig::default()
    };
    let model = init_trigram_equivalent(&corpus, &cfg)?;

    // Interpolate the first-pass scores with the model, taking two steps
    // through it whenever a split pair is walked.
    let mut lm = SplitInterpLm {
        lambda: 0.4,
        new_lm: SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain),
        table,
    };

    let mut probe = SlmLatticeLm::new(&model, SearchParams::default(), PeekMode::Plain);
    let comp = admissible_comp(&split, &mut probe)? + 1e-6;
    let params = RescoreParams {
        log_comp: comp,
        ..params
    };
    println!("\nadmissible per-word compensation: {:.4}", comp);

    let result = astar_decode(&split, &mut lm, &params)?;
    println!(
        "A* best path: {:?} (score {:.3}, {} extension steps)",
        split.path_words(&result.path),
        result.score,
        result.extension_steps
    );

    let diag = nbest_sample_and_rank(&split, &mut lm, &params, 4)?;
    println!(
        "rank among the {} best first-pass paths after rescoring: {}",
        diag.sample_scores.len(),
        diag.rank
    );
    Ok(())
}
