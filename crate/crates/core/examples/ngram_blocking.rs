//! Beam search with and without n-gram blocking: blocked generations never
//! repeat an n-gram, at the price of some likelihood.
//!
//! ```text
//! cargo run --release --example ngram_blocking
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use verdec::decode::{duplicate_ngrams, generate, StrategyConfig};
use verdec::harness::{ExperimentConfig, Prepared};
use verdec::lm::tokenize;
use verdec::textproc::distinct_ngrams;

fn main() -> verdec::Result<()> {
    let config = ExperimentConfig::load(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/experiment.json"),
    )?;
    let prepared = Prepared::load(&config)?;
    let vocab = prepared.model.vocabulary();

    println!(
        "{:<24} {:>9} {:>10} {:>6} {:>9} {:>9}",
        "strategy", "log-prob", "distinct4", "dup3", "dup20", "dead-ends"
    );
    for spec in [
        "bs",
        "bs:n=20",
        "bs:n=10",
        "bs:n=4",
        "bs:n=3",
        "greedy",
        "greedy:n=3",
    ] {
        let cfg: StrategyConfig = spec.parse()?;
        let (mut lp, mut d4, mut dup3, mut dup20, mut dead) = (0.0, 0, 0, 0, 0);
        let prefixes = &prepared.prefixes[..10];
        for prefix in prefixes {
            let context = vocab.encode_lossy(&tokenize(&prefix.prefix_text()))?;
            let mut rng = ChaCha20Rng::seed_from_u64(0);
            let g = generate(
                &prepared.model,
                &context,
                &cfg,
                &vocab.terminal_ids(),
                &mut rng,
            )?;
            lp += g.total_logprob();
            d4 += distinct_ngrams(&g.tokens, 4);
            dup3 += duplicate_ngrams(&g.tokens, 3);
            dup20 += duplicate_ngrams(&g.tokens, 20);
            dead += g.dead_ends;
        }
        let n = prefixes.len() as f64;
        println!(
            "{:<24} {:>9.2} {:>10.1} {:>6.1} {:>9.1} {:>9.1}",
            cfg.to_string(),
            lp / n,
            d4 as f64 / n,
            dup3 as f64 / n,
            dup20 as f64 / n,
            dead as f64 / n
        );
    }
    Ok(())
}
