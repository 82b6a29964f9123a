//! Sentence segmentation, referent substitution, the verifiability length
//! filter and distinct n-gram counting.
//!
//! ```text
//! cargo run --example sentence_processing
//! ```

use verdec::lm::tokenize;
use verdec::textproc::{
    distinct_ngrams, first_k_sentences, segment_sentences, substitute_referents,
    MAX_VERIFIABLE_TOKENS,
};

fn main() {
    let title = "Ada Lovelace";
    let mut text = String::from(
        "She was an English mathematician . The mathematician wrote the first program . \
         She worked with Babbage ! Was it a program ?",
    );
    text.push_str(&" long".repeat(MAX_VERIFIABLE_TOKENS));
    text.push_str(" . And a trailing fragment");

    let tokens = tokenize(&text);
    let sentences = segment_sentences(&tokens);
    println!("{} tokens, {} sentences\n", tokens.len(), sentences.len());
    for s in &sentences {
        let shown: String = s.processed_text.chars().take(60).collect();
        println!(
            "#{} tokens {:>3}..{:<3} verifiable {:<5} {shown}",
            s.index, s.start, s.end, s.verifiable
        );
    }

    println!("\nfirst 3 with referents substituted:");
    for s in first_k_sentences(&sentences, 3) {
        println!("  {}", substitute_referents(&s.processed_text, title));
    }

    let repetitive = tokenize("He sang . He sang . He sang .");
    for n in 1..=4 {
        println!(
            "distinct {n}-grams of a looping text: {}",
            distinct_ngrams(&repetitive, n)
        );
    }
}
