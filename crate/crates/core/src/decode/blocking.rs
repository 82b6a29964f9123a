use crate::lm::TokenId;

/// Whether `candidate` may follow `history` under n-gram blocking of order `n`.
///
/// Returns `false` iff `history ++ [candidate]` ends with an n-gram that
/// already occurs somewhere in `history`. The history is the full context
/// the decoder conditions on, prompt included.
pub fn apply_ngram_block(history: &[TokenId], candidate: TokenId, n: usize) -> bool {
    debug_assert!(n >= 2, "blocking order must be >= 2");
    if history.len() < n {
        return true;
    }
    let suffix = &history[history.len() - (n - 1)..];
    !history
        .windows(n)
        .any(|w| w[n - 1] == candidate && &w[..n - 1] == suffix)
}

/// Every token that [`apply_ngram_block`] would reject after `history`, sorted and deduplicated.
pub fn blocked_tokens(history: &[TokenId], n: usize) -> Vec<TokenId> {
    if history.len() < n {
        return Vec::new();
    }
    let suffix = &history[history.len() - (n - 1)..];
    let mut out: Vec<TokenId> = history
        .windows(n)
        .filter(|w| &w[..n - 1] == suffix)
        .map(|w| w[n - 1])
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Number of n-gram occurrences that repeat an earlier one.
pub fn duplicate_ngrams(tokens: &[TokenId], n: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    tokens.windows(n).filter(|w| !seen.insert(*w)).count()
}
