use rand::Rng;

use super::beam::{rank_hypotheses, search, BeamHypothesis, BeamStep, Diversity};
use super::sampling::{sample_step, Sampler};
use super::{Generation, Limits};
use crate::lm::{LanguageModel, TokenId};
use crate::{Error, Result};

/// Delayed beam search: sample the first `delay` tokens of each sentence
/// with top-k, then finish the sentence with beam search of width `beam_size`.
///
/// A sentence ends at any token in `terminals`. When the beam phase ends,
/// the best hypothesis is committed and the beam collapses to it before the
/// next sampling phase. With `delay == 0` there is no sampling phase and the
/// decoder is plain beam search over the whole budget.
#[allow(clippy::too_many_arguments)]
pub fn decode_delayed_bs<M, R>(
    model: &M,
    prefix: &[TokenId],
    k: usize,
    beam_size: usize,
    delay: usize,
    terminals: &[TokenId],
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
    if beam_size < 1 {
        return Err(Error::Config("beam size must be >= 1".into()));
    }
    model.check_context(prefix)?;
    if delay == 0 {
        let (beam, dead_ends) = search(model, prefix, beam_size, Diversity::None, limits)?;
        return Ok(beam[0].clone().into_generation(dead_ends));
    }

    let mut current = BeamHypothesis::empty();
    let mut in_sentence = 0usize;
    let mut dead_ends = 0usize;
    let mut context = prefix.to_vec();
    while current.len() < limits.max_tokens {
        if in_sentence < delay {
            let step = sample_step(
                model,
                &context,
                Sampler::TopK(k),
                limits.blocking_order,
                rng,
            )?;
            dead_ends += step.dead_end as usize;
            current.tokens.push(step.token);
            current.token_logprobs.push(step.logprob);
            current.cumulative_logprob += step.logprob;
            context.push(step.token);
            in_sentence = if terminals.contains(&step.token) {
                0
            } else {
                in_sentence + 1
            };
        } else {
            let mut beam = BeamStep {
                model,
                prefix,
                beam_size,
                diversity: Diversity::None,
                blocking: limits.blocking_order,
                dead_ends: 0,
            };
            current = finish_sentence(&mut beam, current, terminals, limits.max_tokens)?;
            dead_ends += beam.dead_ends;
            context.truncate(prefix.len());
            context.extend_from_slice(&current.tokens);
            in_sentence = 0;
        }
    }
    Ok(current.into_generation(dead_ends))
}

/// Beam-searches from `start` until the best finished sentence cannot be
/// beaten by any live hypothesis, or the budget runs out.
fn finish_sentence<M: LanguageModel + ?Sized>(
    beam_step: &mut BeamStep<'_, M>,
    start: BeamHypothesis,
    terminals: &[TokenId],
    max_tokens: usize,
) -> Result<BeamHypothesis> {
    let mut alive = vec![start];
    let mut finished: Vec<BeamHypothesis> = Vec::new();
    let mut settled = false;
    while alive[0].len() < max_tokens {
        let mut next_alive = Vec::new();
        for hyp in beam_step.advance(&alive)? {
            if terminals.contains(hyp.tokens.last().expect("extended hypothesis")) {
                finished.push(hyp);
            } else {
                next_alive.push(hyp);
            }
        }
        if next_alive.is_empty() {
            settled = true;
            break;
        }
        next_alive.sort_by(rank_hypotheses);
        alive = next_alive;
        finished.sort_by(rank_hypotheses);
        if finished
            .first()
            .is_some_and(|f| f.cumulative_logprob >= alive[0].cumulative_logprob)
        {
            settled = true;
            break;
        }
    }
    let mut pool = finished;
    if !settled || pool.is_empty() {
        pool.extend(alive);
    }
    pool.sort_by(rank_hypotheses);
    Ok(pool.swap_remove(0))
}
