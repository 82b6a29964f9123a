//! Sentence segmentation, referent substitution and n-gram statistics.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::lm::{detokenize, is_terminal};

/// Sentences longer than this many tokens are not sent to the fact checker.
pub const MAX_VERIFIABLE_TOKENS: usize = 50;

/// Number of leading sentences evaluated per generation.
pub const DEFAULT_EVAL_SENTENCES: usize = 5;

/// Pronouns replaced by the page title when they open a sentence.
pub const SUBJECT_PRONOUNS: [&str; 4] = ["He", "She", "It", "They"];

/// One sentence of a generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub index: usize,
    /// Half-open token span `[start, end)` into the generation.
    pub start: usize,
    pub end: usize,
    /// Sentence text after referent substitution.
    pub processed_text: String,
    pub verifiable: bool,
}

impl SentenceRecord {
    pub fn token_count(&self) -> usize {
        self.end - self.start
    }
}

/// Splits after every `.`, `!` or `?` token; a trailing fragment is its own sentence.
///
/// `processed_text` holds the raw sentence text until
/// [`substitute_referents`] is applied.
pub fn segment_sentences<S: AsRef<str>>(tokens: &[S]) -> Vec<SentenceRecord> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if is_terminal(t.as_ref()) {
            out.push(sentence(tokens, out.len(), start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push(sentence(tokens, out.len(), start, tokens.len()));
    }
    out
}

fn sentence<S: AsRef<str>>(tokens: &[S], index: usize, start: usize, end: usize) -> SentenceRecord {
    let mut record = SentenceRecord {
        index,
        start,
        end,
        processed_text: detokenize(&tokens[start..end]),
        verifiable: false,
    };
    record.verifiable = is_verifiable(&record);
    record
}

/// The first `min(k, len)` sentences.
pub fn first_k_sentences(sentences: &[SentenceRecord], k: usize) -> &[SentenceRecord] {
    &sentences[..k.min(sentences.len())]
}

/// Whether the raw sentence is short enough to be a single checkable claim.
pub fn is_verifiable(sentence: &SentenceRecord) -> bool {
    sentence.token_count() <= MAX_VERIFIABLE_TOKENS
}

/// Replaces a sentence-initial subject pronoun, or a sentence-initial
/// `The` plus the following token, with `title`. At most one substitution
/// is made; anything else is returned unchanged.
pub fn substitute_referents(sentence_text: &str, title: &str) -> String {
    let tokens: Vec<&str> = sentence_text.split_whitespace().collect();
    let replaced = match tokens.as_slice() {
        [first, rest @ ..] if SUBJECT_PRONOUNS.contains(first) => Some(rest),
        ["The", _noun, rest @ ..] => Some(rest),
        _ => None,
    };
    match replaced {
        Some(rest) => {
            let mut out = title.to_string();
            for t in rest {
                out.push(' ');
                out.push_str(t);
            }
            out
        }
        None => sentence_text.to_string(),
    }
}

/// Number of distinct contiguous `n`-token windows.
pub fn distinct_ngrams<T: Eq + Hash>(tokens: &[T], n: usize) -> usize {
    assert!(n >= 1, "n-gram order must be >= 1");
    tokens.windows(n).collect::<HashSet<_>>().len()
}
