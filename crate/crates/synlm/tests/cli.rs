//! End-to-end checks of the command suite: each subcommand runs against
//! real files, exit codes follow the 0/1/2 convention, and output is
//! deterministic across runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_synlm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("synlm-cli-{}-{}", name, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TOY_TREES: &str = "\
( (S (NP-SBJ (DT the) (NN dog)) (VP (VBD chased) (NP (DT the) (NN cat))) (. .)) )
( (S (NP-SBJ (DT a) (NN cat)) (VP (VBD saw) (NP (DT the) (NN dog)))) )
( (S (NP-SBJ (NN dog)) (VP (VBD ran))) )
( (S (NP-SBJ (DT the) (NN cat)) (VP (VBD ran))) )
( (S (NP-SBJ (DT a) (NN dog)) (VP (VBD saw) (NP (NN cat)))) )
( (S (NP-SBJ (NN cat)) (VP (VBD chased) (NP (DT a) (NN dog))) (. .)) )
( (S (NP-SBJ (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat)))) )
( (S (NP-SBJ (NN dog)) (VP (VBD chased) (NP (NN cat)))) )
( (S (NP-SBJ (DT a) (NN cat)) (VP (VBD ran)) (. .)) )
( (S (NP-SBJ (DT the) (NN cat)) (VP (VBD saw) (NP (NN dog)))) )
( (S (NP-SBJ (NN cat)) (VP (VBD saw) (NP (DT the) (NN dog)))) )
( (S (NP-SBJ (DT a) (NN dog)) (VP (VBD ran))) )
";

const TOY_CORPUS: &str = "\
the dog chased the cat
a cat saw the dog
dog ran
the cat saw a dog
";

const TOY_LATTICE: &str = "\
SLMLAT 1
NODES 4
0 0
1 0.5
2 0.5
3 1.1
LINKS 4
0 0 1 the -1.2 -0.9
1 0 2 a -1.1 -1.4
2 1 3 dog -2.0 -1.0
3 2 3 dog -2.1 -1.0
START 0
END 3
";

#[test]
fn full_pipeline_through_the_cli() {
    let dir = workdir("pipeline");
    let trees = dir.join("toy.trees");
    write(&trees, TOY_TREES);
    let corpus = dir.join("toy.txt");
    write(&corpus, TOY_CORPUS);

    // preprocess -> toy.bin.trees + toy.deriv
    let out = run(&["preprocess", trees.to_str().unwrap()]);
    assert!(out.status.success(), "{:?}", out);
    assert!(dir.join("toy.bin.trees").exists());
    assert!(dir.join("toy.deriv").exists());

    // init-slm on the binarized trees
    let model = dir.join("model");
    let out = run(&[
        "init-slm",
        dir.join("toy.bin.trees").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--coarse-buckets",
    ]);
    assert!(out.status.success(), "{:?}", out);
    for f in ["predictor.desc", "tagger.counts", "words.vocab"] {
        assert!(model.join(f).exists(), "missing {}", f);
    }

    // ppl emits the report fields
    let out = run(&[
        "ppl",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--variant",
        "L2R",
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = stdout(&out);
    assert!(text.contains("l2r_ppl="));
    assert!(text.contains("words="));
    assert!(text.contains("ppl="));

    // parse emits one tree per sentence
    let out = run(&[
        "parse",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--single-root",
    ]);
    assert!(out.status.success(), "{:?}", out);
    assert_eq!(stdout(&out).lines().count(), 4);
    assert!(stdout(&out).lines().all(|l| l.contains("(TOP~")));

    // train-slm stage 1 prints a metrics line per iteration
    let trained = dir.join("model-e1");
    let out = run(&[
        "train-slm",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--stage",
        "1",
        "--iters",
        "1",
        "--out",
        trained.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = stdout(&out);
    assert!(text.contains("stage=1 iteration=1"));
    assert!(text.contains("l_n="));
    assert!(text.contains("types="));
    assert!(trained.join("stage1-iter001").join("predictor.desc").exists());

    // train-interp builds a trigram directory usable by ppl --trigram
    let tri = dir.join("tri");
    let out = run(&[
        "train-interp",
        "--corpus",
        corpus.to_str().unwrap(),
        "--ngram",
        "3",
        "--coarse-buckets",
        "--out",
        tri.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{:?}", out);
    let out = run(&[
        "ppl",
        "--model",
        trained.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--trigram",
        tri.to_str().unwrap(),
        "--lambda",
        "0.36",
    ]);
    assert!(out.status.success(), "{:?}", out);
    assert!(stdout(&out).contains("interp_ppl="));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rescore_modes_and_wer() {
    let dir = workdir("rescore");
    let trees = dir.join("toy.trees");
    write(&trees, TOY_TREES);
    let out = run(&["preprocess", trees.to_str().unwrap()]);
    assert!(out.status.success());
    let model = dir.join("model");
    let out = run(&[
        "init-slm",
        dir.join("toy.bin.trees").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--coarse-buckets",
    ]);
    assert!(out.status.success());
    let lat = dir.join("toy.lat");
    write(&lat, TOY_LATTICE);

    // Pure lattice-score Viterbi (the lambda=1 reduction).
    let out = run(&[
        "rescore",
        lat.to_str().unwrap(),
        "--mode",
        "viterbi",
        "--lambda",
        "1.0",
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = stdout(&out);
    assert!(text.contains("mode=viterbi"));
    assert!(text.contains("words=the dog"));

    // A* with the model interpolated against the lattice scores.
    for mode in ["astar", "peek", "peek-prune", "normalized"] {
        let out = run(&[
            "rescore",
            lat.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--mode",
            mode,
            "--lambda",
            "0.4",
            "--lm-weight",
            "4",
            "--nbest",
            "2",
        ]);
        assert!(out.status.success(), "mode {}: {:?}", mode, out);
        assert!(stdout(&out).contains("nbest_rank="));
    }

    // wer
    let hyp = dir.join("hyp.txt");
    let reference = dir.join("ref.txt");
    write(&hyp, "the dog ran\na cat saw a dog\n");
    write(&reference, "the dog ran\na cat saw the dog\n");
    let out = run(&["wer", hyp.to_str().unwrap(), reference.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("wer=0.125"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes_follow_the_convention() {
    // Unknown flag: usage error, exit 1.
    let out = run(&["ppl", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown subcommand: usage error, exit 1.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Incompatible flags: --fudge belongs to ppl, not rescore.
    let out = run(&["rescore", "x.lat", "--fudge", "2.0"]);
    assert_eq!(out.status.code(), Some(1));

    // Missing input file: data error, exit 2.
    let out = run(&["wer", "/nonexistent/h.txt", "/nonexistent/r.txt"]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed data: exit 2.
    let dir = workdir("exitcodes");
    let bad = dir.join("bad.trees");
    write(&bad, "(X (Y w)");
    let out = run(&["preprocess", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 8"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn output_is_deterministic_and_parallelism_preserves_order() {
    let dir = workdir("determinism");
    let trees = dir.join("toy.trees");
    write(&trees, TOY_TREES);
    run(&["preprocess", trees.to_str().unwrap()]);
    let model = dir.join("model");
    run(&[
        "init-slm",
        dir.join("toy.bin.trees").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--coarse-buckets",
    ]);
    let corpus = dir.join("toy.txt");
    write(&corpus, TOY_CORPUS);
    let args = [
        "ppl",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);

    let serial = stdout(&run(&[
        "parse",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ]));
    let parallel = stdout(&run(&[
        "parse",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--jobs",
        "3",
    ]));
    assert_eq!(serial, parallel);
    let _ = std::fs::remove_dir_all(&dir);
}
