//! Decoding strategies over the [`LanguageModel`](crate::lm::LanguageModel) contract.
//!
//! Every strategy emits exactly `max_tokens` tokens; there is no
//! end-of-sequence token. Probability ties are broken by ascending token id
//! and final beam ties by the lexicographically smaller token sequence, so
//! likelihood-based strategies are fully deterministic. Sampling strategies
//! are reproducible given the RNG.
//!
//! Optional n-gram blocking filters candidates before any diversity penalty.
//! If blocking leaves a hypothesis with no candidate, the single most
//! probable blocked token is admitted and counted in
//! [`Generation::dead_ends`].

mod beam;
mod blocking;
mod delayed;
mod sampling;
mod step;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use beam::{
    beam_search, decode_beam, decode_greedy, decode_group_bs, decode_sibling_bs, group_beam_search,
    sibling_beam_search, BeamHypothesis,
};
pub use blocking::{apply_ngram_block, blocked_tokens, duplicate_ngrams};
pub use delayed::decode_delayed_bs;
pub use sampling::{decode_top_k, decode_top_p, nucleus, sample_top_k, sample_top_p, top_k_set};

use crate::lm::{LanguageModel, TokenId};
use crate::{Error, Result};

/// Generation length used throughout the evaluation protocol.
pub const DEFAULT_MAX_TOKENS: usize = 256;

/// Length budget and blocking shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_tokens: usize,
    pub blocking_order: Option<usize>,
}

impl Limits {
    pub fn new(max_tokens: usize) -> Self {
        Self {
            max_tokens,
            blocking_order: None,
        }
    }

    pub fn blocked(max_tokens: usize, n: usize) -> Self {
        Self {
            max_tokens,
            blocking_order: Some(n),
        }
    }
}

/// The next-token selection rule and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    TopK {
        k: usize,
    },
    TopP {
        p: f64,
    },
    Beam {
        beam_size: usize,
    },
    GroupBeam {
        beam_size: usize,
        groups: usize,
        penalty: f64,
    },
    SiblingBeam {
        beam_size: usize,
        penalty: f64,
    },
    DelayedBeam {
        k: usize,
        beam_size: usize,
        delay: usize,
    },
}

impl Strategy {
    /// Sampling-involved strategies depend on the seed; the rest do not.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Strategy::TopK { .. } | Strategy::TopP { .. } | Strategy::DelayedBeam { .. }
        )
    }

    fn family(&self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::TopK { .. } => "top-k",
            Strategy::TopP { .. } => "top-p",
            Strategy::Beam { .. } => "BS",
            Strategy::GroupBeam { .. } => "GroupBS",
            Strategy::SiblingBeam { .. } => "SiblingBS",
            Strategy::DelayedBeam { .. } => "DelayedBS",
        }
    }
}

/// A fully specified decoding configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(flatten)]
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking_order: Option<usize>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

impl StrategyConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            blocking_order: None,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn with_blocking(mut self, n: usize) -> Self {
        self.blocking_order = Some(n);
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_tokens: self.max_tokens,
            blocking_order: self.blocking_order,
        }
    }

    /// Short display name, e.g. `BS` or `BS_b` when blocking is on.
    pub fn label(&self) -> String {
        let family = self.strategy.family();
        match self.blocking_order {
            Some(_) => format!("{family}_b"),
            None => family.to_string(),
        }
    }

    /// Best-performing parameters per strategy, in reporting order:
    /// top-k, top-p, greedy, BS, GroupBS, SiblingBS, DelayedBS, BS_b.
    pub fn tuned_defaults() -> Vec<StrategyConfig> {
        [
            "top-k",
            "top-p",
            "greedy",
            "bs",
            "group-bs",
            "sibling-bs",
            "delayed-bs",
            "bs-b",
        ]
        .iter()
        .map(|name| name.parse().expect("built-in strategy name"))
        .collect()
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.max_tokens < 1 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        if let Some(n) = self.blocking_order {
            if n < 2 {
                return Err(Error::Config(format!(
                    "blocking order must be >= 2, got {n}"
                )));
            }
        }
        let check_k = |k: usize| {
            if k < 1 || k > vocab_size {
                Err(Error::Config(format!(
                    "top-k needs 1 <= k <= {vocab_size}, got {k}"
                )))
            } else {
                Ok(())
            }
        };
        let check_beam = |b: usize| {
            if b < 1 {
                Err(Error::Config("beam size must be >= 1".into()))
            } else {
                Ok(())
            }
        };
        let check_penalty = |x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("penalty must be >= 0, got {x}")))
            }
        };
        match self.strategy {
            Strategy::Greedy => Ok(()),
            Strategy::TopK { k } => check_k(k),
            Strategy::TopP { p } => {
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("top-p needs 0 < p <= 1, got {p}")))
                }
            }
            Strategy::Beam { beam_size } => check_beam(beam_size),
            Strategy::GroupBeam {
                beam_size,
                groups,
                penalty,
            } => {
                check_beam(beam_size)?;
                check_penalty(penalty)?;
                if groups < 1 || beam_size % groups != 0 {
                    return Err(Error::Config(format!(
                        "beam size {beam_size} is not divisible into {groups} groups"
                    )));
                }
                Ok(())
            }
            Strategy::SiblingBeam { beam_size, penalty } => {
                check_beam(beam_size)?;
                check_penalty(penalty)
            }
            Strategy::DelayedBeam { k, beam_size, .. } => {
                check_k(k)?;
                check_beam(beam_size)
            }
        }
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = match self.strategy {
            Strategy::Greedy => String::new(),
            Strategy::TopK { k } => format!("k={k}"),
            Strategy::TopP { p } => format!("p={p}"),
            Strategy::Beam { beam_size } => format!("beam_size={beam_size}"),
            Strategy::GroupBeam {
                beam_size,
                groups,
                penalty,
            } => format!("beam_size={beam_size},groups={groups},penalty={penalty}"),
            Strategy::SiblingBeam { beam_size, penalty } => {
                format!("beam_size={beam_size},penalty={penalty}")
            }
            Strategy::DelayedBeam {
                k,
                beam_size,
                delay,
            } => format!("k={k},beam_size={beam_size},delay={delay}"),
        };
        let mut parts = vec![params];
        if let Some(n) = self.blocking_order {
            parts.push(format!("n={n}"));
        }
        if self.max_tokens != DEFAULT_MAX_TOKENS {
            parts.push(format!("max_tokens={}", self.max_tokens));
        }
        let params = parts
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(",");
        let name = match self.strategy {
            Strategy::Greedy => "greedy",
            Strategy::TopK { .. } => "top-k",
            Strategy::TopP { .. } => "top-p",
            Strategy::Beam { .. } => "bs",
            Strategy::GroupBeam { .. } => "group-bs",
            Strategy::SiblingBeam { .. } => "sibling-bs",
            Strategy::DelayedBeam { .. } => "delayed-bs",
        };
        if params.is_empty() {
            write!(f, "{name}")
        } else {
            write!(f, "{name}:{params}")
        }
    }
}

/// Parses `name[:key=value,...]`.
///
/// Names: `greedy`, `top-k`, `top-p`, `bs`, `group-bs`, `sibling-bs`,
/// `delayed-bs`, `bs-b`. Omitted keys take the tuned defaults. Keys: `k`,
/// `p`, `beam_size`, `groups`, `penalty`, `delay`, `n` (blocking order),
/// `max_tokens`.
impl FromStr for StrategyConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p),
            None => (s.trim(), ""),
        };
        let mut cfg = match name.to_ascii_lowercase().as_str() {
            "greedy" => StrategyConfig::new(Strategy::Greedy),
            "top-k" | "topk" => StrategyConfig::new(Strategy::TopK { k: 2 }),
            "top-p" | "topp" => StrategyConfig::new(Strategy::TopP { p: 0.4 }),
            "bs" | "beam" => StrategyConfig::new(Strategy::Beam { beam_size: 15 }),
            "group-bs" | "groupbs" => StrategyConfig::new(Strategy::GroupBeam {
                beam_size: 16,
                groups: 2,
                penalty: 0.2,
            }),
            "sibling-bs" | "siblingbs" => StrategyConfig::new(Strategy::SiblingBeam {
                beam_size: 15,
                penalty: 0.1,
            }),
            "delayed-bs" | "delayedbs" => StrategyConfig::new(Strategy::DelayedBeam {
                k: 100,
                beam_size: 6,
                delay: 1,
            }),
            "bs-b" | "bs_b" => {
                StrategyConfig::new(Strategy::Beam { beam_size: 15 }).with_blocking(20)
            }
            other => return Err(Error::Config(format!("unknown strategy {other:?}"))),
        };
        for kv in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
            let int = || {
                value.trim().parse::<usize>().map_err(|_| {
                    Error::Config(format!("{key}: expected an integer, got {value:?}"))
                })
            };
            let real = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))
            };
            match (key.trim(), &mut cfg.strategy) {
                ("n", _) => cfg.blocking_order = Some(int()?),
                ("max_tokens", _) => cfg.max_tokens = int()?,
                ("k", Strategy::TopK { k } | Strategy::DelayedBeam { k, .. }) => *k = int()?,
                ("p", Strategy::TopP { p }) => *p = real()?,
                (
                    "beam_size",
                    Strategy::Beam { beam_size }
                    | Strategy::GroupBeam { beam_size, .. }
                    | Strategy::SiblingBeam { beam_size, .. }
                    | Strategy::DelayedBeam { beam_size, .. },
                ) => *beam_size = int()?,
                ("groups", Strategy::GroupBeam { groups, .. }) => *groups = int()?,
                (
                    "penalty",
                    Strategy::GroupBeam { penalty, .. } | Strategy::SiblingBeam { penalty, .. },
                ) => *penalty = real()?,
                ("delay", Strategy::DelayedBeam { delay, .. }) => *delay = int()?,
                (other, _) => {
                    return Err(Error::Config(format!(
                        "parameter {other:?} does not apply to {name}"
                    )))
                }
            }
        }
        Ok(cfg)
    }
}

/// Tokens emitted by one decoding run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generation {
    pub tokens: Vec<TokenId>,
    /// Unpenalized model log-probability of each token given everything before it.
    pub token_logprobs: Vec<f64>,
    /// Steps at which blocking rejected every candidate.
    pub dead_ends: usize,
}

impl Generation {
    fn push(&mut self, step: step::Step) {
        self.tokens.push(step.token);
        self.token_logprobs.push(step.logprob);
        self.dead_ends += step.dead_end as usize;
    }

    pub fn total_logprob(&self) -> f64 {
        self.token_logprobs.iter().sum()
    }
}

/// Runs `cfg` after `prefix`. `terminals` are the sentence-ending token ids
/// (used by delayed beam search); `rng` is only consumed by sampling strategies.
pub fn generate<M, R>(
    model: &M,
    prefix: &[TokenId],
    cfg: &StrategyConfig,
    terminals: &[TokenId],
    rng: &mut R,
) -> Result<Generation>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate(model.vocab_size())?;
    let limits = cfg.limits();
    match cfg.strategy {
        Strategy::Greedy => decode_greedy(model, prefix, &limits),
        Strategy::TopK { k } => decode_top_k(model, prefix, k, &limits, rng),
        Strategy::TopP { p } => decode_top_p(model, prefix, p, &limits, rng),
        Strategy::Beam { beam_size } => decode_beam(model, prefix, beam_size, &limits),
        Strategy::GroupBeam {
            beam_size,
            groups,
            penalty,
        } => decode_group_bs(model, prefix, beam_size, groups, penalty, &limits),
        Strategy::SiblingBeam { beam_size, penalty } => {
            decode_sibling_bs(model, prefix, beam_size, penalty, &limits)
        }
        Strategy::DelayedBeam {
            k,
            beam_size,
            delay,
        } => decode_delayed_bs(model, prefix, k, beam_size, delay, terminals, &limits, rng),
    }
}

/// One persisted generation: a JSON-lines row of the generations file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prefix_id: String,
    pub strategy: String,
    pub params: StrategyConfig,
    /// Seed replicate index; `seed` is the stream seed derived from it.
    #[serde(default)]
    pub replicate: usize,
    pub seed: u64,
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<f64>,
    pub text: String,
    #[serde(default)]
    pub dead_ends: usize,
}
