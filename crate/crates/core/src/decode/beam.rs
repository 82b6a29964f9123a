use std::cmp::Ordering;
use std::collections::HashMap;

use super::step::ranked_candidates;
use super::{Generation, Limits};
use crate::lm::{LanguageModel, TokenId};
use crate::{Error, Result};

/// A partial continuation held in the beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamHypothesis {
    pub tokens: Vec<TokenId>,
    pub token_logprobs: Vec<f64>,
    /// Sum of `token_logprobs`, accumulated left to right. Never includes
    /// diversity penalties.
    pub cumulative_logprob: f64,
}

impl BeamHypothesis {
    pub fn empty() -> Self {
        Self {
            tokens: Vec::new(),
            token_logprobs: Vec::new(),
            cumulative_logprob: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn extended(&self, token: TokenId, logprob: f64) -> Self {
        let mut next = self.clone();
        next.tokens.push(token);
        next.token_logprobs.push(logprob);
        next.cumulative_logprob += logprob;
        next
    }

    pub(crate) fn into_generation(self, dead_ends: usize) -> Generation {
        Generation {
            tokens: self.tokens,
            token_logprobs: self.token_logprobs,
            dead_ends,
        }
    }
}

/// Higher score first, then the lexicographically smaller token sequence.
pub(crate) fn rank_hypotheses(a: &BeamHypothesis, b: &BeamHypothesis) -> Ordering {
    b.cumulative_logprob
        .total_cmp(&a.cumulative_logprob)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// How candidate scores are adjusted before the top-β cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Diversity {
    None,
    /// Beam split into `groups` equal groups filled in order; a candidate's
    /// score in group g drops by `penalty` per selection of the same token
    /// by groups before g at this step.
    Group {
        groups: usize,
        penalty: f64,
    },
    /// Score drops by `penalty` times the candidate's rank among its siblings.
    Sibling {
        penalty: f64,
    },
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    source: usize,
    token: TokenId,
    logprob: f64,
    rank: usize,
    base: f64,
}

/// Per-step state shared by all beam variants.
pub(crate) struct BeamStep<'m, M: ?Sized> {
    pub model: &'m M,
    pub prefix: &'m [TokenId],
    pub beam_size: usize,
    pub diversity: Diversity,
    pub blocking: Option<usize>,
    pub dead_ends: usize,
}

impl<M: LanguageModel + ?Sized> BeamStep<'_, M> {
    fn expand(&mut self, beam: &[BeamHypothesis]) -> Result<Vec<Candidate>> {
        let mut out = Vec::with_capacity(beam.len() * self.beam_size);
        let mut context =
            Vec::with_capacity(self.prefix.len() + beam.first().map_or(0, |h| h.len()) + 1);
        for (source, hyp) in beam.iter().enumerate() {
            context.clear();
            context.extend_from_slice(self.prefix);
            context.extend_from_slice(&hyp.tokens);
            let dist = self.model.next_distribution(&context)?;
            let (tokens, dead_end) =
                ranked_candidates(&dist, &context, self.blocking, self.beam_size);
            self.dead_ends += dead_end as usize;
            for (rank, token) in tokens.into_iter().enumerate() {
                let logprob = dist.logprob(token);
                out.push(Candidate {
                    source,
                    token,
                    logprob,
                    rank,
                    base: hyp.cumulative_logprob + logprob,
                });
            }
        }
        Ok(out)
    }

    fn select(&self, beam: &[BeamHypothesis], mut pool: Vec<Candidate>) -> Vec<Candidate> {
        let lex = |a: &Candidate, b: &Candidate| {
            beam[a.source]
                .tokens
                .iter()
                .chain(std::iter::once(&a.token))
                .cmp(
                    beam[b.source]
                        .tokens
                        .iter()
                        .chain(std::iter::once(&b.token)),
                )
        };
        let by_score = |scores: &[f64], order: &mut Vec<usize>, pool: &[Candidate]| {
            order.sort_by(|&i, &j| {
                scores[j]
                    .total_cmp(&scores[i])
                    .then_with(|| lex(&pool[i], &pool[j]))
            });
        };

        match self.diversity {
            Diversity::None | Diversity::Sibling { .. } => {
                let scores: Vec<f64> = pool
                    .iter()
                    .map(|c| match self.diversity {
                        Diversity::Sibling { penalty } => c.base - penalty * c.rank as f64,
                        _ => c.base,
                    })
                    .collect();
                let mut order: Vec<usize> = (0..pool.len()).collect();
                by_score(&scores, &mut order, &pool);
                order.truncate(self.beam_size);
                order.into_iter().map(|i| pool[i]).collect()
            }
            Diversity::Group { groups, penalty } => {
                let group_size = self.beam_size / groups;
                let mut chosen = Vec::with_capacity(self.beam_size);
                let mut picked: HashMap<TokenId, usize> = HashMap::new();
                for _ in 0..groups {
                    if pool.is_empty() {
                        break;
                    }
                    let scores: Vec<f64> = pool
                        .iter()
                        .map(|c| {
                            let times = picked.get(&c.token).copied().unwrap_or(0);
                            c.base - penalty * times as f64
                        })
                        .collect();
                    let mut order: Vec<usize> = (0..pool.len()).collect();
                    by_score(&scores, &mut order, &pool);
                    order.truncate(group_size);
                    let group: Vec<Candidate> = order.iter().map(|&i| pool[i]).collect();
                    let mut take = vec![false; pool.len()];
                    for &i in &order {
                        take[i] = true;
                    }
                    pool = pool
                        .into_iter()
                        .zip(take)
                        .filter_map(|(c, t)| (!t).then_some(c))
                        .collect();
                    for c in &group {
                        *picked.entry(c.token).or_default() += 1;
                    }
                    chosen.extend(group);
                }
                chosen
            }
        }
    }

    /// Extends every hypothesis and keeps the selected `beam_size` candidates.
    pub fn advance(&mut self, beam: &[BeamHypothesis]) -> Result<Vec<BeamHypothesis>> {
        let pool = self.expand(beam)?;
        let selected = self.select(beam, pool);
        Ok(selected
            .into_iter()
            .map(|c| beam[c.source].extended(c.token, c.logprob))
            .collect())
    }
}

fn check_beam_size(beam_size: usize) -> Result<()> {
    if beam_size < 1 {
        return Err(Error::Config("beam size must be >= 1".into()));
    }
    Ok(())
}

/// Runs the search for `limits.max_tokens` steps and returns the final beam
/// ordered best first.
pub(crate) fn search<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    diversity: Diversity,
    limits: &Limits,
) -> Result<(Vec<BeamHypothesis>, usize)> {
    model.check_context(prefix)?;
    let mut step = BeamStep {
        model,
        prefix,
        beam_size,
        diversity,
        blocking: limits.blocking_order,
        dead_ends: 0,
    };
    let mut beam = vec![BeamHypothesis::empty()];
    for _ in 0..limits.max_tokens {
        beam = step.advance(&beam)?;
    }
    beam.sort_by(rank_hypotheses);
    Ok((beam, step.dead_ends))
}

/// Final beam of plain beam search, best first.
pub fn beam_search<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    limits: &Limits,
) -> Result<Vec<BeamHypothesis>> {
    check_beam_size(beam_size)?;
    Ok(search(model, prefix, beam_size, Diversity::None, limits)?.0)
}

/// Emits the most probable token at every step.
pub fn decode_greedy<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    limits: &Limits,
) -> Result<Generation> {
    model.check_context(prefix)?;
    let mut context = prefix.to_vec();
    let mut out = Generation::default();
    for _ in 0..limits.max_tokens {
        let dist = model.next_distribution(&context)?;
        let (candidates, dead_end) = ranked_candidates(&dist, &context, limits.blocking_order, 1);
        let token = candidates[0];
        let logprob = dist.logprob(token);
        out.tokens.push(token);
        out.token_logprobs.push(logprob);
        out.dead_ends += dead_end as usize;
        context.push(token);
    }
    Ok(out)
}

/// Beam search of width `beam_size`; returns the best final hypothesis.
pub fn decode_beam<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    limits: &Limits,
) -> Result<Generation> {
    check_beam_size(beam_size)?;
    best(search(model, prefix, beam_size, Diversity::None, limits)?)
}

/// Group-diverse beam search with a same-step token-count penalty.
pub fn decode_group_bs<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    groups: usize,
    penalty: f64,
    limits: &Limits,
) -> Result<Generation> {
    check_group_params(beam_size, groups, penalty)?;
    best(search(
        model,
        prefix,
        beam_size,
        Diversity::Group { groups, penalty },
        limits,
    )?)
}

/// Final beam of group-diverse beam search, best first.
pub fn group_beam_search<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    groups: usize,
    penalty: f64,
    limits: &Limits,
) -> Result<Vec<BeamHypothesis>> {
    check_group_params(beam_size, groups, penalty)?;
    Ok(search(
        model,
        prefix,
        beam_size,
        Diversity::Group { groups, penalty },
        limits,
    )?
    .0)
}

/// Sibling-diverse beam search with a rank penalty.
pub fn decode_sibling_bs<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    penalty: f64,
    limits: &Limits,
) -> Result<Generation> {
    check_beam_size(beam_size)?;
    check_penalty(penalty)?;
    best(search(
        model,
        prefix,
        beam_size,
        Diversity::Sibling { penalty },
        limits,
    )?)
}

/// Final beam of sibling-diverse beam search, best first.
pub fn sibling_beam_search<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    beam_size: usize,
    penalty: f64,
    limits: &Limits,
) -> Result<Vec<BeamHypothesis>> {
    check_beam_size(beam_size)?;
    check_penalty(penalty)?;
    Ok(search(
        model,
        prefix,
        beam_size,
        Diversity::Sibling { penalty },
        limits,
    )?
    .0)
}

fn check_penalty(penalty: f64) -> Result<()> {
    if !(penalty.is_finite() && penalty >= 0.0) {
        return Err(Error::Config(format!(
            "penalty must be >= 0, got {penalty}"
        )));
    }
    Ok(())
}

fn check_group_params(beam_size: usize, groups: usize, penalty: f64) -> Result<()> {
    check_beam_size(beam_size)?;
    check_penalty(penalty)?;
    if groups < 1 || !beam_size.is_multiple_of(groups) {
        return Err(Error::Config(format!(
            "beam size {beam_size} is not divisible into {groups} groups"
        )));
    }
    Ok(())
}

fn best((beam, dead_ends): (Vec<BeamHypothesis>, usize)) -> Result<Generation> {
    beam.into_iter()
        .next()
        .map(|h| h.into_generation(dead_ends))
        .ok_or_else(|| Error::Input("beam emptied".into()))
}
