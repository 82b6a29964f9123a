#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use verdec::harness::ExperimentConfig;
use verdec::lm::{TableModel, TokenDistribution, TokenId};

pub fn desk_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk")
}

/// The shipped desk config with its output redirected into `out`.
pub fn desk_config(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::load(desk_dir().join("experiment.json")).expect("desk config");
    c.output_dir = out.to_path_buf();
    c
}

fn random_dist(rng: &mut ChaCha20Rng, vocab: usize, sparse: bool) -> TokenDistribution {
    let mut w: Vec<f64> = (0..vocab).map(|_| rng.gen_range(0.01..1.0)).collect();
    if sparse && vocab > 2 {
        // Zero out one token so -inf scores are exercised.
        let i = rng.gen_range(1..vocab);
        w[i] = 0.0;
    }
    TokenDistribution::from_weights(&w).expect("positive weights")
}

/// Every history of length `order - 1` gets its own random row.
pub fn random_table_model(seed: u64, vocab: usize, order: usize) -> TableModel {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut model = TableModel::new(order, random_dist(&mut rng, vocab, false)).unwrap();
    let h = order - 1;
    for index in 0..vocab.pow(h as u32) {
        let mut history = Vec::with_capacity(h);
        let mut x = index;
        for _ in 0..h {
            history.push((x % vocab) as TokenId);
            x /= vocab;
        }
        let sparse = rng.gen_bool(0.2);
        model
            .set_row(history, random_dist(&mut rng, vocab, sparse))
            .unwrap();
    }
    model
}

/// All sequences of `len` tokens over `vocab` symbols, lexicographic.
pub fn all_sequences(vocab: usize, len: usize) -> Vec<Vec<TokenId>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..vocab as TokenId).map(move |t| {
                    let mut n = s.clone();
                    n.push(t);
                    n
                })
            })
            .collect();
    }
    out
}

/// Post-hoc count of repeated n-gram occurrences.
pub fn repeated_ngrams<T: Eq + std::hash::Hash>(tokens: &[T], n: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    tokens.windows(n).filter(|w| !seen.insert(*w)).count()
}
