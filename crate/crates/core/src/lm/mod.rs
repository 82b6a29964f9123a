//! Next-token distributions and the language models that produce them.

mod ngram;
mod table;
mod vocab;

pub use ngram::{NGramLm, SmoothingConfig, MODEL_FORMAT_VERSION};
pub use table::TableModel;
pub use vocab::{detokenize, is_terminal, tokenize, Vocabulary, TERMINAL_PUNCTUATION, UNK};

use crate::{Error, Result};

/// Dense token index into a [`Vocabulary`].
pub type TokenId = u32;

/// Tolerance on `log-sum-exp(logprobs) = 0` for a valid distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Normalized natural-log probabilities over a whole vocabulary for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    logprobs: Vec<f64>,
}

impl TokenDistribution {
    /// Wraps already-normalized log-probabilities, checking every invariant.
    pub fn from_logprobs(logprobs: Vec<f64>) -> Result<Self> {
        let dist = Self { logprobs };
        dist.validate()?;
        Ok(dist)
    }

    /// Builds a distribution from non-negative weights (need not sum to one).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Input(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Input("weights sum to zero".into()));
        }
        let logprobs = weights
            .iter()
            .map(|&w| {
                if w == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (w / total).ln()
                }
            })
            .collect();
        Self::from_logprobs(logprobs)
    }

    /// Normalizes arbitrary log-weights with log-sum-exp.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Input("logits have no finite maximum".into()));
        }
        let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        Self::from_logprobs(logits.iter().map(|&l| l - lse).collect())
    }

    /// The uniform distribution over `size` tokens.
    pub fn uniform(size: usize) -> Self {
        let lp = -(size as f64).ln();
        Self {
            logprobs: vec![lp; size],
        }
    }

    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    pub fn logprob(&self, token: TokenId) -> f64 {
        self.logprobs[token as usize]
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.logprobs[token as usize].exp()
    }

    /// Token ids ordered by probability descending, ties by ascending id.
    pub fn ranked(&self) -> Vec<TokenId> {
        let mut ids: Vec<TokenId> = (0..self.logprobs.len() as TokenId).collect();
        ids.sort_by(|&a, &b| {
            self.logprobs[b as usize]
                .total_cmp(&self.logprobs[a as usize])
                .then(a.cmp(&b))
        });
        ids
    }

    /// Most probable token; the lowest id wins ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &lp) in self.logprobs.iter().enumerate().skip(1) {
            if lp > self.logprobs[best] {
                best = i;
            }
        }
        best as TokenId
    }

    /// `ln Σ exp(logprob)`; zero for a normalized distribution.
    pub fn log_mass(&self) -> f64 {
        let max = self
            .logprobs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        max + self
            .logprobs
            .iter()
            .map(|&l| (l - max).exp())
            .sum::<f64>()
            .ln()
    }

    /// Returns a renormalized copy with `masked` tokens set to zero probability,
    /// or `None` when nothing with positive mass would remain.
    pub fn masked(&self, masked: &[TokenId]) -> Option<Self> {
        if masked.is_empty() {
            return Some(self.clone());
        }
        let mut logits = self.logprobs.clone();
        for &t in masked {
            logits[t as usize] = f64::NEG_INFINITY;
        }
        Self::from_logits(&logits).ok()
    }

    fn validate(&self) -> Result<()> {
        if self.logprobs.len() < 2 {
            return Err(Error::Input(
                "distribution needs at least two tokens".into(),
            ));
        }
        if self
            .logprobs
            .iter()
            .any(|l| l.is_nan() || *l == f64::INFINITY)
        {
            return Err(Error::Input("logprobs must be finite or -inf".into()));
        }
        let mass = self.log_mass();
        if !mass.is_finite() {
            return Err(Error::Input("distribution has no support".into()));
        }
        if mass.abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Input(format!(
                "distribution not normalized: log-sum-exp = {mass:e}"
            )));
        }
        Ok(())
    }
}

/// Autoregressive next-token model.
///
/// Implementations must be pure: equal contexts give bit-identical output.
pub trait LanguageModel: Sync {
    fn vocab_size(&self) -> usize;

    /// Distribution of the token following `context` (most recent last).
    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution>;

    fn check_context(&self, context: &[TokenId]) -> Result<()> {
        let size = self.vocab_size();
        match context.iter().find(|&&t| t as usize >= size) {
            Some(t) => Err(Error::Input(format!(
                "token id {t} out of range for vocabulary of {size}"
            ))),
            None => Ok(()),
        }
    }
}

impl<M: LanguageModel + ?Sized + Send> LanguageModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        (**self).next_distribution(context)
    }
}

/// Chain-rule log-probability of `continuation` following `prefix`.
pub fn sequence_logprob<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    continuation: &[TokenId],
) -> Result<f64> {
    if continuation.is_empty() {
        return Err(Error::Input("continuation must be nonempty".into()));
    }
    model.check_context(prefix)?;
    model.check_context(continuation)?;
    let mut context = prefix.to_vec();
    let mut total = 0.0;
    for &token in continuation {
        total += model.next_distribution(&context)?.logprob(token);
        context.push(token);
    }
    Ok(total)
}

/// `exp(-(1/T) Σ ln p(w_t | w_<t))` over `corpus`, scored from a cold start.
///
/// A zero-probability token yields `+inf` rather than an error.
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, corpus: &[TokenId]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Input("perplexity of an empty corpus".into()));
    }
    model.check_context(corpus)?;
    let mut total = 0.0;
    for t in 0..corpus.len() {
        total += model.next_distribution(&corpus[..t])?.logprob(corpus[t]);
    }
    Ok((-total / corpus.len() as f64).exp())
}
