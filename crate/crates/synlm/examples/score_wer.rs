//! Word error rate by Levenshtein alignment: substitutions, insertions
//! and deletions each cost one, divided by the reference length.
//!
//! Run with `cargo run -p synlm --example score_wer`.

use synlm::eval::wer;

fn main() {
    let pairs = [
        (
            "UPSTATE NEW YORK SOMEWHERE UH ALL ALL THE HUGE AREAS",
            "UP UPSTATE NEW YORK SOMEWHERE UH OVER OVER HUGE AREAS",
        ),
        ("the dog barks", "the dog barks"),
        ("", "three words here"),
        ("a cat saw a dog", "a cat saw the dog"),
    ];
    for (hyp, reference) in pairs {
        let h: Vec<&str> = hyp.split_whitespace().collect();
        let r: Vec<&str> = reference.split_whitespace().collect();
        println!("hyp: {:?}", h);
        println!("ref: {:?}", r);
        println!("wer: {:.1}%\n", 100.0 * wer(&h, &r));
    }
}
