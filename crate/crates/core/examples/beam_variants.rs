//! Greedy decoding, beam search and its group-diverse and sibling-diverse
//! variants on one desk prefix.
//!
//! ```text
//! cargo run --release --example beam_variants
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use verdec::decode::{generate, StrategyConfig};
use verdec::harness::{ExperimentConfig, Prepared};
use verdec::lm::{detokenize, tokenize};

fn main() -> verdec::Result<()> {
    let config = ExperimentConfig::load(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/experiment.json"),
    )?;
    let prepared = Prepared::load(&config)?;
    let vocab = prepared.model.vocabulary();
    let prefix = &prepared.prefixes[0];
    let context = vocab.encode_lossy(&tokenize(&prefix.prefix_text()))?;
    println!("prefix: {}\n", prefix.prefix_text());

    for spec in [
        "greedy",
        "bs:beam_size=1",
        "bs:beam_size=5",
        "bs:beam_size=15",
        "group-bs",
        "group-bs:beam_size=15,groups=3,penalty=2",
        "sibling-bs",
        "sibling-bs:beam_size=15,penalty=2",
    ] {
        let cfg: StrategyConfig = spec.parse::<StrategyConfig>()?.with_max_tokens(40);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let g = generate(
            &prepared.model,
            &context,
            &cfg,
            &vocab.terminal_ids(),
            &mut rng,
        )?;
        println!(
            "{cfg}\n  log-prob {:.3}\n  {}\n",
            g.total_logprob(),
            detokenize(&vocab.decode(&g.tokens)?)
        );
    }
    Ok(())
}
