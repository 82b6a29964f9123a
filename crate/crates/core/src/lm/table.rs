use std::collections::BTreeMap;

use super::{LanguageModel, TokenDistribution, TokenId};
use crate::{Error, Result};

/// Markov model given by explicit conditional rows.
///
/// The row keyed by the last `order - 1` context tokens is used; contexts
/// that are shorter or have no row get the fallback distribution. Handy for
/// hand-built fixtures and for random models in property tests.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    order: usize,
    vocab_size: usize,
    rows: BTreeMap<Vec<TokenId>, TokenDistribution>,
    fallback: TokenDistribution,
}

impl TableModel {
    pub fn new(order: usize, fallback: TokenDistribution) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config("table model order must be >= 1".into()));
        }
        Ok(Self {
            order,
            vocab_size: fallback.len(),
            rows: BTreeMap::new(),
            fallback,
        })
    }

    /// Uniform model over `vocab_size` tokens.
    pub fn uniform(vocab_size: usize) -> Self {
        Self {
            order: 1,
            vocab_size,
            rows: BTreeMap::new(),
            fallback: TokenDistribution::uniform(vocab_size),
        }
    }

    /// Sets the distribution following `history` (length `order - 1`).
    pub fn set_row(&mut self, history: Vec<TokenId>, dist: TokenDistribution) -> Result<()> {
        if history.len() != self.order - 1 {
            return Err(Error::Input(format!(
                "history length {} does not match order {}",
                history.len(),
                self.order
            )));
        }
        if dist.len() != self.vocab_size {
            return Err(Error::Input("row size differs from vocabulary size".into()));
        }
        self.check_context(&history)?;
        self.rows.insert(history, dist);
        Ok(())
    }

    /// Builder form of [`set_row`](Self::set_row) taking raw probabilities.
    pub fn with_row(mut self, history: Vec<TokenId>, probs: &[f64]) -> Result<Self> {
        self.set_row(history, TokenDistribution::from_weights(probs)?)?;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl LanguageModel for TableModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        self.check_context(context)?;
        let h = self.order - 1;
        if context.len() >= h {
            if let Some(row) = self.rows.get(&context[context.len() - h..]) {
                return Ok(row.clone());
            }
        }
        Ok(self.fallback.clone())
    }
}
