//! Decoding-strategy laboratory.
//!
//! `verdec` generates fixed-length continuations from an autoregressive
//! language model with a family of decoding strategies, splits them into
//! sentences, labels each sentence with a fact checker, and scores the
//! result for verifiability (supported sentences per generation and per
//! verified sentence, plus their deduplicated variants) and repetitiveness
//! (distinct 4-grams).
//!
//! The crate is organized bottom-up:
//!
//! - [`lm`]: next-token distribution contract and a smoothed n-gram model.
//! - [`decode`]: greedy, top-k, top-p, beam search and its group-diverse,
//!   sibling-diverse and delayed variants, with optional n-gram blocking.
//! - [`textproc`]: sentence segmentation, referent substitution, the
//!   verifiability length filter and distinct n-gram counts.
//! - [`factcheck`]: tf-idf retrieval and a knowledge-base oracle checker.
//! - [`metrics`]: SPG/SPV/USPG/USPV, 4-gram proportion, Pearson correlation.
//! - [`harness`]: experiment configuration, multi-seed runs, sweeps, reports
//!   and the shipped desk-scale fixture.

pub mod decode;
pub mod error;
pub mod factcheck;
pub mod harness;
pub mod jsonl;
pub mod lm;
pub mod metrics;
pub mod textproc;

pub use error::{Error, Result};
