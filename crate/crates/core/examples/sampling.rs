//! Top-k and nucleus (top-p) truncation on a fixed distribution, and the
//! empirical frequencies they produce.
//!
//! ```text
//! cargo run --release --example sampling
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use verdec::decode::{nucleus, sample_top_k, sample_top_p, top_k_set};
use verdec::lm::TokenDistribution;

const DRAWS: usize = 100_000;

fn main() -> verdec::Result<()> {
    let dist = TokenDistribution::from_weights(&[0.4, 0.25, 0.2, 0.1, 0.05])?;
    let mut rng = ChaCha20Rng::seed_from_u64(7);

    for k in [1, 2, 5] {
        let mut counts = [0usize; 5];
        for _ in 0..DRAWS {
            counts[sample_top_k(&dist, k, &mut rng)? as usize] += 1;
        }
        println!(
            "top-k k={k}: support {:?}, frequencies {}",
            top_k_set(&dist, k)?,
            freqs(&counts)
        );
    }
    for p in [0.4, 0.8, 1.0] {
        let mut counts = [0usize; 5];
        for _ in 0..DRAWS {
            counts[sample_top_p(&dist, p, &mut rng)? as usize] += 1;
        }
        println!(
            "top-p p={p}: nucleus {:?}, frequencies {}",
            nucleus(&dist, p)?,
            freqs(&counts)
        );
    }

    let peaked = TokenDistribution::from_weights(&[0.5, 0.3, 0.2])?;
    println!(
        "\np=0.4 over [0.5, 0.3, 0.2] keeps {:?}: always token 0",
        nucleus(&peaked, 0.4)?
    );
    Ok(())
}

fn freqs(counts: &[usize]) -> String {
    let parts: Vec<String> = counts
        .iter()
        .map(|&c| format!("{:.3}", c as f64 / DRAWS as f64))
        .collect();
    format!("[{}]", parts.join(", "))
}
