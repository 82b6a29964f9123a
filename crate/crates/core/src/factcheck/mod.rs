//! Sentence-level fact checking against a knowledge base.
//!
//! The shipped checker mirrors the usual retrieve-then-judge pipeline with
//! deterministic parts: tf-idf retrieval over the knowledge-base documents,
//! candidate facts drawn from the top documents, and a content-word Jaccard
//! match against each candidate standing in for entailment.

mod tfidf;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use tfidf::TfIdfIndex;

use crate::{jsonl, Error, Result};

/// Function words dropped before retrieval and matching.
pub const STOPWORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "of", "in", "on", "at", "to", "for", "from", "by",
    "with", "as", "into", "about", "is", "are", "was", "were", "be", "been", "being", "has",
    "have", "had", "do", "does", "did", "this", "that", "these", "those", "it", "its", "he", "she",
    "they", "his", "her", "their", "him", "them", "which", "who", "whom", "also",
];

/// Default Jaccard threshold for a match.
pub const DEFAULT_TAU: f64 = 0.8;

/// Default number of retrieved documents whose facts are candidates.
pub const DEFAULT_TOP_DOCS: usize = 3;

/// Lowercases, turns non-alphanumeric characters into separators and drops stopwords.
pub fn normalize(text: &str) -> Vec<String> {
    let lowered: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    lowered
        .split_whitespace()
        .filter(|w| !STOPWORDS.contains(w))
        .map(str::to_owned)
        .collect()
}

fn content_words(text: &str) -> BTreeSet<String> {
    normalize(text).into_iter().collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// The statement is true.
    Asserts,
    /// The statement is false; matching it refutes a sentence.
    Contradicts,
}

/// A canonical claim with the document it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactStatement {
    pub fact_id: String,
    #[serde(rename = "text")]
    pub canonical_text: String,
    pub polarity: Polarity,
    pub source_doc_id: String,
}

/// A retrievable document; one JSON-lines row of the documents file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Supported,
    Refuted,
    NotEnoughInfo,
}

impl Label {
    pub fn is_verified(self) -> bool {
        self != Label::NotEnoughInfo
    }
}

/// Outcome of checking one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    /// Ids of the facts justifying the label; empty iff `NotEnoughInfo`.
    pub evidence: BTreeSet<String>,
    /// Best Jaccard overlap found, in `[0, 1]`.
    pub score: f64,
}

impl Verdict {
    pub fn not_enough_info(score: f64) -> Self {
        Self {
            label: Label::NotEnoughInfo,
            evidence: BTreeSet::new(),
            score,
        }
    }

    pub fn supported<I: IntoIterator<Item = S>, S: Into<String>>(evidence: I) -> Self {
        Self {
            label: Label::Supported,
            evidence: evidence.into_iter().map(Into::into).collect(),
            score: 1.0,
        }
    }

    pub fn refuted<I: IntoIterator<Item = S>, S: Into<String>>(evidence: I) -> Self {
        Self {
            label: Label::Refuted,
            evidence: evidence.into_iter().map(Into::into).collect(),
            score: 1.0,
        }
    }
}

/// Facts plus the retrieval corpus they cite. Immutable once built.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    /// Sorted by `fact_id`.
    facts: Vec<FactStatement>,
    fact_words: Vec<BTreeSet<String>>,
    documents: BTreeMap<String, String>,
    /// Fact indices per document, in fact-id order.
    facts_by_doc: BTreeMap<String, Vec<usize>>,
    index: TfIdfIndex,
}

impl KnowledgeBase {
    pub fn new(mut facts: Vec<FactStatement>, documents: Vec<Document>) -> Result<Self> {
        let mut docs = BTreeMap::new();
        for d in documents {
            if docs.insert(d.doc_id.clone(), d.text).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate doc_id {:?}",
                    d.doc_id
                )));
            }
        }
        facts.sort_by(|a, b| a.fact_id.cmp(&b.fact_id));
        let mut seen = HashSet::new();
        let mut facts_by_doc: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, f) in facts.iter().enumerate() {
            if !seen.insert(f.fact_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate fact_id {:?}",
                    f.fact_id
                )));
            }
            if f.canonical_text.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "fact {:?} has empty text",
                    f.fact_id
                )));
            }
            if !docs.contains_key(&f.source_doc_id) {
                return Err(Error::Validation(format!(
                    "fact {:?} cites unknown document {:?}",
                    f.fact_id, f.source_doc_id
                )));
            }
            facts_by_doc
                .entry(f.source_doc_id.clone())
                .or_default()
                .push(i);
        }
        let fact_words = facts
            .iter()
            .map(|f| content_words(&f.canonical_text))
            .collect();
        let index = TfIdfIndex::build(docs.iter().map(|(id, text)| (id.as_str(), text.as_str())));
        Ok(Self {
            facts,
            fact_words,
            documents: docs,
            facts_by_doc,
            index,
        })
    }

    /// Loads facts and documents from their JSON-lines files.
    pub fn load(facts: impl AsRef<Path>, documents: impl AsRef<Path>) -> Result<Self> {
        Self::new(jsonl::read(facts)?, jsonl::read(documents)?)
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new()).expect("empty knowledge base is valid")
    }

    pub fn facts(&self) -> &[FactStatement] {
        &self.facts
    }

    pub fn document(&self, doc_id: &str) -> Option<&str> {
        self.documents.get(doc_id).map(String::as_str)
    }

    pub fn documents(&self) -> impl Iterator<Item = (&str, &str)> {
        self.documents.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn index(&self) -> &TfIdfIndex {
        &self.index
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

/// Documents ranked by tf-idf cosine similarity to `query`, best first,
/// ties by ascending doc id, truncated to `top_m`.
///
/// A query with no content words after normalization returns nothing.
pub fn retrieve_tfidf(query: &str, kb: &KnowledgeBase, top_m: usize) -> Vec<(String, f64)> {
    if normalize(query).is_empty() {
        return Vec::new();
    }
    let scores = kb.index.scores(query);
    let mut ranked: Vec<(String, f64)> = kb.index.doc_ids().iter().cloned().zip(scores).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_m);
    ranked
}

/// Cosine similarity of two texts under the knowledge base's idf table.
pub fn tfidf_relevance(text: &str, doc_text: &str, kb: &KnowledgeBase) -> f64 {
    kb.index.similarity(text, doc_text)
}

/// Checker thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerConfig {
    /// Minimum Jaccard overlap for a fact to decide the label.
    pub tau: f64,
    /// Documents retrieved per sentence.
    pub top_docs: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            top_docs: DEFAULT_TOP_DOCS,
        }
    }
}

impl CheckerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!(
                "tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if self.top_docs < 1 {
            return Err(Error::Config("top_docs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Labels `sentence` against `kb`.
///
/// The best-overlapping candidate fact decides: at or above `tau` an
/// `asserts` fact gives `Supported` and a `contradicts` fact gives
/// `Refuted`; on exact score ties `Refuted` wins and the evidence is every
/// tied fact of the winning polarity. Otherwise `NotEnoughInfo`.
pub fn check_sentence(sentence: &str, kb: &KnowledgeBase, config: &CheckerConfig) -> Verdict {
    let words = content_words(sentence);
    if words.is_empty() || kb.is_empty() {
        return Verdict::not_enough_info(0.0);
    }
    let mut candidates: Vec<usize> = retrieve_tfidf(sentence, kb, config.top_docs)
        .into_iter()
        .filter(|(_, score)| *score > 0.0)
        .filter_map(|(doc, _)| kb.facts_by_doc.get(&doc))
        .flatten()
        .copied()
        .collect();
    candidates.sort_unstable();

    let scored: Vec<(usize, f64)> = candidates
        .into_iter()
        .map(|i| (i, jaccard(&words, &kb.fact_words[i])))
        .collect();
    let best = scored.iter().map(|&(_, s)| s).fold(0.0, f64::max);
    if best < config.tau {
        return Verdict::not_enough_info(best);
    }
    let tied: Vec<&FactStatement> = scored
        .iter()
        .filter(|&&(_, s)| s == best)
        .map(|&(i, _)| &kb.facts[i])
        .collect();
    let polarity = if tied.iter().any(|f| f.polarity == Polarity::Contradicts) {
        Polarity::Contradicts
    } else {
        Polarity::Asserts
    };
    Verdict {
        label: match polarity {
            Polarity::Asserts => Label::Supported,
            Polarity::Contradicts => Label::Refuted,
        },
        evidence: tied
            .iter()
            .filter(|f| f.polarity == polarity)
            .map(|f| f.fact_id.clone())
            .collect(),
        score: best,
    }
}

/// Anything that can label a sentence.
pub trait FactChecker: Sync {
    fn check(&self, sentence: &str) -> Verdict;
}

/// The knowledge-base oracle as a [`FactChecker`].
#[derive(Debug, Clone)]
pub struct OracleChecker {
    pub kb: KnowledgeBase,
    pub config: CheckerConfig,
}

impl OracleChecker {
    pub fn new(kb: KnowledgeBase, config: CheckerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { kb, config })
    }
}

impl FactChecker for OracleChecker {
    fn check(&self, sentence: &str) -> Verdict {
        check_sentence(sentence, &self.kb, &self.config)
    }
}
