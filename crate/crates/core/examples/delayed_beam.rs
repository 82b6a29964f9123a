//! Delayed beam search: sample the first tokens of each sentence, finish it
//! with beam search. Delay 0 is plain beam search; long delays approach
//! top-k sampling.
//!
//! ```text
//! cargo run --release --example delayed_beam
//! ```

use std::path::PathBuf;

use verdec::harness::{generate_record, ExperimentConfig, Prepared};
use verdec::textproc::{distinct_ngrams, segment_sentences};

fn main() -> verdec::Result<()> {
    let config = ExperimentConfig::load(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/experiment.json"),
    )?;
    let prepared = Prepared::load(&config)?;
    let prefix = &prepared.prefixes[3];
    println!("prefix: {}\n", prefix.prefix_text());

    for spec in [
        "bs:beam_size=6",
        "delayed-bs:delay=0",
        "delayed-bs:delay=1",
        "delayed-bs:delay=4",
        "delayed-bs:delay=16",
        "top-k:k=100",
    ] {
        let cfg = spec.parse()?;
        for replicate in 0..2 {
            let r = generate_record(
                &prepared.model,
                prefix,
                spec,
                &cfg,
                replicate,
                config.global_seed,
            )?;
            let sentences = segment_sentences(&r.tokens);
            let first: Vec<&str> = sentences
                .iter()
                .take(3)
                .map(|s| s.processed_text.as_str())
                .collect();
            println!(
                "{spec:<20} seed #{replicate}  distinct4 {:>3}  {}",
                distinct_ngrams(&r.tokens, 4),
                first.join(" ")
            );
        }
    }
    Ok(())
}
