use rand::Rng;

use super::step::{admit, Step};
use super::{Generation, Limits};
use crate::lm::{LanguageModel, TokenDistribution, TokenId};
use crate::{Error, Result};

/// Slack applied when comparing a cumulative mass against `p`.
const NUCLEUS_EPSILON: f64 = 1e-12;

/// The `k` most probable tokens, ties at the cutoff going to the lower id.
pub fn top_k_set(dist: &TokenDistribution, k: usize) -> Result<Vec<TokenId>> {
    if k < 1 || k > dist.len() {
        return Err(Error::Config(format!(
            "top-k needs 1 <= k <= {}, got {k}",
            dist.len()
        )));
    }
    let mut ranked = dist.ranked();
    ranked.truncate(k);
    Ok(ranked)
}

/// Shortest probability-descending prefix whose mass reaches `p`.
pub fn nucleus(dist: &TokenDistribution, p: f64) -> Result<Vec<TokenId>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("top-p needs 0 < p <= 1, got {p}")));
    }
    let mut out = Vec::new();
    let mut mass = 0.0;
    for t in dist.ranked() {
        let prob = dist.prob(t);
        if prob == 0.0 {
            break;
        }
        out.push(t);
        mass += prob;
        if mass >= p - NUCLEUS_EPSILON {
            break;
        }
    }
    Ok(out)
}

/// Draws one token from `support` with probability proportional to `dist`.
///
/// Always consumes exactly one uniform draw from `rng`.
fn draw<R: Rng + ?Sized>(dist: &TokenDistribution, support: &[TokenId], rng: &mut R) -> TokenId {
    let probs: Vec<f64> = support.iter().map(|&t| dist.prob(t)).collect();
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last = support[0];
    for (&t, &p) in support.iter().zip(&probs) {
        if p == 0.0 {
            continue;
        }
        cum += p;
        last = t;
        if u < cum {
            return t;
        }
    }
    last
}

/// Samples among the `k` most probable tokens, renormalized.
pub fn sample_top_k<R: Rng + ?Sized>(
    dist: &TokenDistribution,
    k: usize,
    rng: &mut R,
) -> Result<TokenId> {
    let support = top_k_set(dist, k)?;
    Ok(draw(dist, &support, rng))
}

/// Samples from the nucleus of mass `p`, renormalized.
pub fn sample_top_p<R: Rng + ?Sized>(
    dist: &TokenDistribution,
    p: f64,
    rng: &mut R,
) -> Result<TokenId> {
    let support = nucleus(dist, p)?;
    Ok(draw(dist, &support, rng))
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Sampler {
    TopK(usize),
    TopP(f64),
}

/// Emits one sampled token after `context`, honoring n-gram blocking.
pub(crate) fn sample_step<M, R>(
    model: &M,
    context: &[TokenId],
    sampler: Sampler,
    blocking: Option<usize>,
    rng: &mut R,
) -> Result<Step>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    let dist = model.next_distribution(context)?;
    let allowed = admit(&dist, context, blocking);
    let token = match allowed.restricted {
        Some(ref restricted) => match sampler {
            Sampler::TopK(k) => sample_top_k(restricted, k, rng)?,
            Sampler::TopP(p) => sample_top_p(restricted, p, rng)?,
        },
        None => allowed.fallback,
    };
    Ok(Step {
        token,
        logprob: dist.logprob(token),
        dead_end: allowed.restricted.is_none(),
    })
}

fn decode_sampled<M, R>(
    model: &M,
    prefix: &[TokenId],
    sampler: Sampler,
    limits: &Limits,
    rng: &mut R,
) -> Result<Generation>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    model.check_context(prefix)?;
    let mut context = prefix.to_vec();
    let mut out = Generation::default();
    for _ in 0..limits.max_tokens {
        let step = sample_step(model, &context, sampler, limits.blocking_order, rng)?;
        context.push(step.token);
        out.push(step);
    }
    Ok(out)
}

/// Top-k sampling for `limits.max_tokens` steps.
pub fn decode_top_k<M, R>(
    model: &M,
    prefix: &[TokenId],
    k: usize,
    limits: &Limits,
    rng: &mut R,
) -> Result<Generation>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    if k < 1 || k > model.vocab_size() {
        return Err(Error::Config(format!("top-k k={k} out of range")));
    }
    decode_sampled(model, prefix, Sampler::TopK(k), limits, rng)
}

/// Nucleus sampling for `limits.max_tokens` steps.
pub fn decode_top_p<M, R>(
    model: &M,
    prefix: &[TokenId],
    p: f64,
    limits: &Limits,
    rng: &mut R,
) -> Result<Generation>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("top-p p={p} out of range")));
    }
    decode_sampled(model, prefix, Sampler::TopP(p), limits, rng)
}
