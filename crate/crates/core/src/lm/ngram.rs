use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, TokenDistribution, TokenId, Vocabulary};
use crate::{Error, Result};

/// Version tag written into every saved model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How unseen events receive probability mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SmoothingConfig {
    /// Add-k on the longest seen history, backing off to shorter ones when unseen.
    AddK { k: f64 },
    /// Linear interpolation of maximum-likelihood estimates.
    ///
    /// `weights[0]` weighs the uniform distribution and `weights[i]` the
    /// estimate conditioned on the last `i - 1` tokens, so there are
    /// `order + 1` weights. Weights of histories that are unseen (or longer
    /// than the context) are dropped and the rest renormalized.
    Interpolated { weights: Vec<f64> },
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig::AddK { k: 1.0 }
    }
}

impl SmoothingConfig {
    fn validate(&self, order: usize) -> Result<()> {
        match self {
            SmoothingConfig::AddK { k } => {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(Error::Config(format!(
                        "add-k constant must be > 0, got {k}"
                    )));
                }
            }
            SmoothingConfig::Interpolated { weights } => {
                if weights.len() != order + 1 {
                    return Err(Error::Config(format!(
                        "interpolation needs {} weights for order {order}, got {}",
                        order + 1,
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::Config("interpolation weights must be >= 0".into()));
                }
                if weights[0] <= 0.0 {
                    return Err(Error::Config(
                        "uniform interpolation weight must be > 0".into(),
                    ));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "interpolation weights sum to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct HistoryCounts {
    total: u64,
    next: BTreeMap<TokenId, u64>,
}

/// Count-based n-gram model over a fixed vocabulary.
///
/// Immutable after training; distributions depend only on the last
/// `order - 1` context tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    order: usize,
    vocabulary: Vocabulary,
    smoothing: SmoothingConfig,
    /// `tables[m]` maps histories of length `m` to their continuation counts.
    tables: Vec<BTreeMap<Vec<TokenId>, HistoryCounts>>,
}

impl NGramLm {
    /// Counts every history of length `0..order` in `corpus`.
    pub fn train(
        corpus: &[TokenId],
        vocabulary: Vocabulary,
        order: usize,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config("n-gram order must be >= 1".into()));
        }
        if corpus.is_empty() {
            return Err(Error::Config("training corpus is empty".into()));
        }
        if corpus.len() < order {
            return Err(Error::Config(format!(
                "corpus of {} tokens is shorter than order {order}",
                corpus.len()
            )));
        }
        smoothing.validate(order)?;
        if let Some(bad) = corpus.iter().find(|&&t| t as usize >= vocabulary.len()) {
            return Err(Error::Input(format!("corpus token id {bad} out of range")));
        }

        let mut tables = vec![BTreeMap::<Vec<TokenId>, HistoryCounts>::new(); order];
        for t in 0..corpus.len() {
            for (m, table) in tables.iter_mut().enumerate() {
                if m > t {
                    break;
                }
                let entry = table.entry(corpus[t - m..t].to_vec()).or_default();
                entry.total += 1;
                *entry.next.entry(corpus[t]).or_default() += 1;
            }
        }
        Ok(Self {
            order,
            vocabulary,
            smoothing,
            tables,
        })
    }

    /// Trains on string tokens with a vocabulary of their distinct values.
    pub fn train_tokens<S: AsRef<str>>(
        tokens: &[S],
        order: usize,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Config("training corpus is empty".into()));
        }
        let vocabulary = Vocabulary::from_tokens(tokens.iter().map(AsRef::as_ref), [])?;
        let ids = vocabulary.encode(tokens)?;
        Self::train(&ids, vocabulary, order, smoothing)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn smoothing(&self) -> &SmoothingConfig {
        &self.smoothing
    }

    /// Raw count of `token` following `history` (which must be shorter than the order).
    pub fn count(&self, history: &[TokenId], token: TokenId) -> u64 {
        self.tables
            .get(history.len())
            .and_then(|t| t.get(history))
            .and_then(|h| h.next.get(&token))
            .copied()
            .unwrap_or(0)
    }

    fn history<'a>(&'a self, context: &'a [TokenId], len: usize) -> Option<&'a HistoryCounts> {
        let h = &context[context.len() - len..];
        self.tables[len].get(h).filter(|c| c.total > 0)
    }

    fn add_k(&self, context: &[TokenId], k: f64) -> Vec<f64> {
        let longest = (self.order - 1).min(context.len());
        let counts = (0..=longest)
            .rev()
            .find_map(|m| self.history(context, m))
            .expect("unigram history is always populated");
        let v = self.vocabulary.len() as f64;
        let log_denominator = (counts.total as f64 + k * v).ln();
        let unseen = k.ln() - log_denominator;
        let mut logprobs = vec![unseen; self.vocabulary.len()];
        for (&token, &c) in &counts.next {
            logprobs[token as usize] = (c as f64 + k).ln() - log_denominator;
        }
        logprobs
    }

    fn interpolated(&self, context: &[TokenId], weights: &[f64]) -> Vec<f64> {
        let v = self.vocabulary.len();
        let mut probs = vec![weights[0] / v as f64; v];
        let mut used = weights[0];
        for m in 0..self.order.min(context.len() + 1) {
            let w = weights[m + 1];
            if w == 0.0 {
                continue;
            }
            if let Some(counts) = self.history(context, m) {
                used += w;
                let total = counts.total as f64;
                for (&token, &c) in &counts.next {
                    probs[token as usize] += w * c as f64 / total;
                }
            }
        }
        probs.iter().map(|p| (p / used).ln()).collect()
    }

    /// Writes counts, vocabulary and smoothing as versioned JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&self.to_stored())?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stored: StoredModel = serde_json::from_str(&text)?;
        Self::from_stored(stored)
    }

    fn to_stored(&self) -> StoredModel {
        StoredModel {
            format_version: MODEL_FORMAT_VERSION,
            order: self.order,
            smoothing: self.smoothing.clone(),
            vocabulary: self.vocabulary.clone(),
            tables: self
                .tables
                .iter()
                .map(|table| {
                    table
                        .iter()
                        .map(|(h, c)| StoredHistory {
                            history: h.clone(),
                            next: c.next.iter().map(|(&t, &n)| (t, n)).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn from_stored(stored: StoredModel) -> Result<Self> {
        if stored.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                stored.format_version
            )));
        }
        if stored.order < 1 || stored.tables.len() != stored.order {
            return Err(Error::Config(
                "model order does not match its count tables".into(),
            ));
        }
        stored.smoothing.validate(stored.order)?;
        let v = stored.vocabulary.len();
        let mut tables = Vec::with_capacity(stored.order);
        for (m, entries) in stored.tables.into_iter().enumerate() {
            let mut table = BTreeMap::new();
            for entry in entries {
                let in_range = entry.history.iter().all(|&t| (t as usize) < v)
                    && entry.next.iter().all(|&(t, _)| (t as usize) < v);
                if entry.history.len() != m || !in_range {
                    return Err(Error::Config("malformed count table entry".into()));
                }
                let next: BTreeMap<TokenId, u64> = entry.next.into_iter().collect();
                let total = next.values().sum();
                table.insert(entry.history, HistoryCounts { total, next });
            }
            tables.push(table);
        }
        if tables[0].get(&Vec::new()).is_none_or(|c| c.total == 0) {
            return Err(Error::Config("model has no unigram counts".into()));
        }
        Ok(Self {
            order: stored.order,
            vocabulary: stored.vocabulary,
            smoothing: stored.smoothing,
            tables,
        })
    }
}

impl LanguageModel for NGramLm {
    fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        self.check_context(context)?;
        let logprobs = match &self.smoothing {
            SmoothingConfig::AddK { k } => self.add_k(context, *k),
            SmoothingConfig::Interpolated { weights } => self.interpolated(context, weights),
        };
        TokenDistribution::from_logprobs(logprobs)
    }
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format_version: u32,
    order: usize,
    smoothing: SmoothingConfig,
    vocabulary: Vocabulary,
    tables: Vec<Vec<StoredHistory>>,
}

#[derive(Serialize, Deserialize)]
struct StoredHistory {
    history: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}
