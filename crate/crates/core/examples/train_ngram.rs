//! Trains n-gram models of several orders on the desk corpus, compares
//! their perplexity on the reference documents and round-trips one
//! through a model file.
//!
//! ```text
//! cargo run --release --example train_ngram
//! ```

use std::path::PathBuf;

use verdec::factcheck::KnowledgeBase;
use verdec::harness::train_from_file;
use verdec::lm::{perplexity, tokenize, LanguageModel, NGramLm, SmoothingConfig};

fn main() -> verdec::Result<()> {
    let desk = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk");
    let kb = KnowledgeBase::load(desk.join("kb/facts.jsonl"), desk.join("kb/documents.jsonl"))?;
    let held_out: Vec<String> = kb
        .documents()
        .flat_map(|(_, text)| tokenize(text))
        .collect();

    for order in [2, 4, 6, 8] {
        for k in [1.0, 0.01, 0.001] {
            let model =
                train_from_file(&desk.join("corpus.txt"), order, SmoothingConfig::AddK { k })?;
            let ids = model.vocabulary().encode_lossy(&held_out)?;
            println!(
                "order {order}  add-{k:<6} vocab {:>4}  reference perplexity {:8.3}",
                model.vocab_size(),
                perplexity(&model, &ids)?
            );
        }
    }

    let model = train_from_file(
        &desk.join("corpus.txt"),
        3,
        SmoothingConfig::AddK { k: 0.1 },
    )?;
    let path = std::env::temp_dir().join("verdec-example-model.json");
    model.save(&path)?;
    let back = NGramLm::load(&path)?;
    let he = model.vocabulary().encode(&["He"])?;
    assert_eq!(
        model.next_distribution(&he)?.logprobs(),
        back.next_distribution(&he)?.logprobs()
    );
    println!(
        "\nsaved and reloaded {} with identical distributions",
        path.display()
    );
    Ok(())
}
