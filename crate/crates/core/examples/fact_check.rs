//! Builds a small knowledge base, retrieves documents with tf-idf and
//! labels sentences Supported, Refuted or NotEnoughInfo.
//!
//! ```text
//! cargo run --example fact_check
//! ```

use verdec::factcheck::{
    retrieve_tfidf, CheckerConfig, Document, FactChecker, FactStatement, KnowledgeBase,
    OracleChecker, Polarity,
};

fn fact(id: &str, text: &str, polarity: Polarity, doc: &str) -> FactStatement {
    FactStatement {
        fact_id: id.into(),
        canonical_text: text.into(),
        polarity,
        source_doc_id: doc.into(),
    }
}

fn main() -> verdec::Result<()> {
    let documents = vec![
        Document {
            doc_id: "curie".into(),
            text: "Marie Curie was a physicist . Marie Curie was born in Warsaw .".into(),
        },
        Document {
            doc_id: "tesla".into(),
            text: "Nikola Tesla was an inventor . Nikola Tesla was born in Smiljan .".into(),
        },
    ];
    let facts = vec![
        fact(
            "curie.job",
            "Marie Curie was a physicist .",
            Polarity::Asserts,
            "curie",
        ),
        fact(
            "curie.born",
            "Marie Curie was born in Warsaw .",
            Polarity::Asserts,
            "curie",
        ),
        fact(
            "curie.born.paris",
            "Marie Curie was born in Paris .",
            Polarity::Contradicts,
            "curie",
        ),
        fact(
            "tesla.job",
            "Nikola Tesla was an inventor .",
            Polarity::Asserts,
            "tesla",
        ),
        fact(
            "tesla.born",
            "Nikola Tesla was born in Smiljan .",
            Polarity::Asserts,
            "tesla",
        ),
    ];
    let kb = KnowledgeBase::new(facts, documents)?;

    println!(
        "retrieval for \"Curie born Warsaw\": {:?}\n",
        retrieve_tfidf("Curie born Warsaw", &kb, 2)
    );

    let checker = OracleChecker::new(kb, CheckerConfig::default())?;
    for sentence in [
        "Marie Curie was born in Warsaw .",
        "Marie Curie was born in Paris .",
        "Nikola Tesla was an inventor .",
        "Nikola Tesla liked pigeons .",
    ] {
        let v = checker.check(sentence);
        println!(
            "{:<36} {:?} score {:.2} evidence {:?}",
            sentence, v.label, v.score, v.evidence
        );
    }
    Ok(())
}
