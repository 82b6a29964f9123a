use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::TokenId;
use crate::{Error, Result};

/// Tokens that end a sentence.
pub const TERMINAL_PUNCTUATION: [&str; 3] = [".", "!", "?"];

/// Placeholder for out-of-vocabulary words when encoding lossily.
pub const UNK: &str = "<unk>";

pub fn is_terminal(token: &str) -> bool {
    TERMINAL_PUNCTUATION.contains(&token)
}

/// Splits on whitespace and detaches trailing `.`, `!`, `?` into their own tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut core = word;
        let mut tail = Vec::new();
        while let Some(last) = core.chars().last() {
            if matches!(last, '.' | '!' | '?') {
                tail.push(last.to_string());
                core = &core[..core.len() - 1];
            } else {
                break;
            }
        }
        if !core.is_empty() {
            out.push(core.to_string());
        }
        out.extend(tail.into_iter().rev());
    }
    out
}

/// Renders tokens back to text, one space between tokens.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Ordered set of distinct token strings with dense ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Ids follow the order of `tokens`.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 {
            return Err(Error::Config("vocabulary needs at least two tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Distinct tokens of `corpus` (plus `extra`) in lexicographic order.
    pub fn from_tokens<'a, I, J>(corpus: I, extra: J) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
        J: IntoIterator<Item = &'a str>,
    {
        let set: BTreeSet<&str> = corpus.into_iter().chain(extra).collect();
        Self::new(set.into_iter().map(str::to_owned).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Encodes every token, failing on the first unknown one.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| Error::Input(format!("unknown token {:?}", t.as_ref())))
            })
            .collect()
    }

    /// Encodes with unknown tokens mapped to [`UNK`], which must be in the vocabulary.
    pub fn encode_lossy<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        let unk = self
            .id(UNK)
            .ok_or_else(|| Error::Config(format!("vocabulary lacks {UNK}")))?;
        Ok(tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(unk))
            .collect())
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<&str>> {
        ids.iter()
            .map(|&id| {
                self.token(id)
                    .ok_or_else(|| Error::Input(format!("token id {id} out of range")))
            })
            .collect()
    }

    /// Ids of the sentence-terminal tokens present in this vocabulary.
    pub fn terminal_ids(&self) -> Vec<TokenId> {
        TERMINAL_PUNCTUATION
            .iter()
            .filter_map(|t| self.id(t))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Self::new(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}
