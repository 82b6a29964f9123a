mod common;

use common::random_table_model;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use verdec::lm::{
    perplexity, sequence_logprob, LanguageModel, NGramLm, SmoothingConfig, TableModel, TokenId,
    Vocabulary,
};

fn eight_symbol_model(seed: u64, smoothing: SmoothingConfig) -> NGramLm {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // A skewed corpus so that many trigram histories stay unseen.
    let corpus: Vec<TokenId> = (0..400)
        .map(|_| rng.gen_range(0..8u32).min(rng.gen_range(0..8u32)))
        .collect();
    let names: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    NGramLm::train(&corpus, Vocabulary::new(names).unwrap(), 3, smoothing).unwrap()
}

fn assert_normalized_everywhere(model: &NGramLm) {
    let v = model.vocab_size() as TokenId;
    let mut contexts = vec![vec![], vec![0]];
    for a in 0..v {
        for b in 0..v {
            for c in 0..v {
                contexts.push(vec![a, b, c]);
            }
        }
    }
    for ctx in contexts {
        let d = model.next_distribution(&ctx).unwrap();
        let mass: f64 = (0..v).map(|t| d.prob(t)).sum();
        assert!((mass - 1.0).abs() < 1e-9, "context {ctx:?} has mass {mass}");
    }
}

#[test]
fn order_three_add_k_normalizes_over_all_contexts() {
    assert_normalized_everywhere(&eight_symbol_model(1, SmoothingConfig::AddK { k: 0.5 }));
    assert_normalized_everywhere(&eight_symbol_model(2, SmoothingConfig::AddK { k: 1e-4 }));
}

#[test]
fn order_three_interpolation_normalizes_over_all_contexts() {
    let smoothing = SmoothingConfig::Interpolated {
        weights: vec![0.1, 0.2, 0.3, 0.4],
    };
    assert_normalized_everywhere(&eight_symbol_model(3, smoothing));
}

#[test]
fn add_k_matches_hand_counts() {
    // After (w0 w1) the corpus continues with w2 twice and w3 once.
    let tokens: Vec<&str> = "w0 w1 w2 w0 w1 w2 w0 w1 w3".split(' ').collect();
    let model = NGramLm::train_tokens(&tokens, 3, SmoothingConfig::AddK { k: 1.0 }).unwrap();
    let v = model.vocabulary();
    let ctx = v.encode(&["w0", "w1"]).unwrap();
    let d = model.next_distribution(&ctx).unwrap();
    let denom = 3.0 + 4.0;
    assert!((d.prob(v.id("w2").unwrap()) - 3.0 / denom).abs() < 1e-12);
    assert!((d.prob(v.id("w3").unwrap()) - 2.0 / denom).abs() < 1e-12);
    assert!((d.prob(v.id("w0").unwrap()) - 1.0 / denom).abs() < 1e-12);
}

#[test]
fn uniform_model_perplexity_is_vocabulary_size() {
    let model = TableModel::uniform(8);
    let corpus: Vec<TokenId> = (0..64).map(|i| (i * 5 % 8) as TokenId).collect();
    assert!((perplexity(&model, &corpus).unwrap() - 8.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequence_logprob_is_associative(seed in any::<u64>(), order in 1usize..4, a in prop::collection::vec(0u32..5, 1..6), b in prop::collection::vec(0u32..5, 1..6)) {
        let model = random_table_model(seed, 5, order);
        let prefix = [2];
        let mut ab = a.clone();
        ab.extend(&b);
        let mut pa = prefix.to_vec();
        pa.extend(&a);
        let whole = sequence_logprob(&model, &prefix, &ab).unwrap();
        let split = sequence_logprob(&model, &prefix, &a).unwrap() + sequence_logprob(&model, &pa, &b).unwrap();
        prop_assert!(whole == split || (whole - split).abs() < 1e-9);
    }

    #[test]
    fn ngram_distributions_normalize(seed in any::<u64>(), order in 1usize..5, k in 1e-4f64..2.0, ctx in prop::collection::vec(0u32..8, 0..6)) {
        let model = {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let corpus: Vec<TokenId> = (0..120).map(|_| rng.gen_range(0..6u32)).collect();
            let names: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
            NGramLm::train(&corpus, Vocabulary::new(names).unwrap(), order, SmoothingConfig::AddK { k }).unwrap()
        };
        let d = model.next_distribution(&ctx).unwrap();
        let mass: f64 = (0..8).map(|t| d.prob(t)).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
        prop_assert!((0..8).all(|t| d.prob(t) > 0.0));
    }

    #[test]
    fn out_of_range_context_is_rejected(seed in any::<u64>(), bad in 8u32..100) {
        let model = eight_symbol_model(seed, SmoothingConfig::AddK { k: 1.0 });
        prop_assert!(model.next_distribution(&[0, bad]).is_err());
    }
}
