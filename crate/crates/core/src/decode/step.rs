use std::borrow::Cow;

use super::blocking::blocked_tokens;
use crate::lm::{TokenDistribution, TokenId};

/// One emitted token with its unpenalized model log-probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Step {
    pub token: TokenId,
    pub logprob: f64,
    /// Every candidate was blocked and the top blocked token was admitted.
    pub dead_end: bool,
}

pub(crate) struct Admitted<'a> {
    /// Distribution renormalized over unblocked tokens, `None` on a dead end.
    pub restricted: Option<Cow<'a, TokenDistribution>>,
    pub fallback: TokenId,
}

pub(crate) fn admit<'a>(
    dist: &'a TokenDistribution,
    context: &[TokenId],
    blocking: Option<usize>,
) -> Admitted<'a> {
    let restricted = match blocking {
        None => Some(Cow::Borrowed(dist)),
        Some(n) => {
            let blocked = blocked_tokens(context, n);
            if blocked.is_empty() {
                Some(Cow::Borrowed(dist))
            } else {
                dist.masked(&blocked).map(Cow::Owned)
            }
        }
    };
    Admitted {
        restricted,
        fallback: dist.argmax(),
    }
}

/// Up to `width` unblocked, positive-probability tokens in rank order.
///
/// On a dead end returns the single most probable token and `true`.
pub(crate) fn ranked_candidates(
    dist: &TokenDistribution,
    context: &[TokenId],
    blocking: Option<usize>,
    width: usize,
) -> (Vec<TokenId>, bool) {
    let blocked = blocking
        .map(|n| blocked_tokens(context, n))
        .unwrap_or_default();
    let ranked = dist.ranked();
    let out: Vec<TokenId> = ranked
        .iter()
        .copied()
        .filter(|&t| dist.logprob(t) > f64::NEG_INFINITY && blocked.binary_search(&t).is_err())
        .take(width)
        .collect();
    if out.is_empty() {
        (vec![ranked[0]], true)
    } else {
        (out, false)
    }
}
