use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{strategy_names, ExperimentConfig};
use super::prefix::{load_prefixes, PrefixEntry};
use super::report::{write_correlations, write_report, CorrelationRow, ReportRow};
use super::seed::stream_seed;
use crate::decode::{generate, GenerationRecord, StrategyConfig};
use crate::factcheck::{
    tfidf_relevance, FactChecker, KnowledgeBase, Label, OracleChecker, Verdict,
};
use crate::lm::{
    detokenize, perplexity, tokenize, LanguageModel, NGramLm, TokenId, Vocabulary, UNK,
};
use crate::metrics::{compute_metrics, fourgram_proportion, pearson, MetricReport, PrefixVerdicts};
use crate::textproc::{
    distinct_ngrams, first_k_sentences, segment_sentences, substitute_referents,
};
use crate::{jsonl, Error, Result};

/// Report name of the human-reference row.
pub const HUMAN: &str = "human";

/// Loaded model, prefixes and checker.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: NGramLm,
    pub prefixes: Vec<PrefixEntry>,
    pub checker: OracleChecker,
}

impl Prepared {
    /// Loads everything `config` refers to, using its test prefixes.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        Self::load_with_prefixes(config, &config.prefixes)
    }

    pub fn load_with_prefixes(config: &ExperimentConfig, prefixes: &Path) -> Result<Self> {
        config.validate()?;
        let model = match &config.model.path {
            Some(path) => NGramLm::load(path)?,
            None => train_from_file(
                &config.corpus,
                config.model.order,
                config.model.smoothing.clone(),
            )?,
        };
        let kb = KnowledgeBase::load(config.facts_path(), config.documents_path())?;
        Ok(Self {
            model,
            prefixes: load_prefixes(prefixes)?,
            checker: OracleChecker::new(kb, config.checker)?,
        })
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.checker.kb
    }
}

/// Trains on a plain-text corpus; the vocabulary is the corpus tokens plus [`UNK`].
pub fn train_from_file(
    corpus: &Path,
    order: usize,
    smoothing: crate::lm::SmoothingConfig,
) -> Result<NGramLm> {
    let text = std::fs::read_to_string(corpus).map_err(|e| Error::io(corpus, e))?;
    train_from_text(&text, order, smoothing)
}

pub fn train_from_text(
    text: &str,
    order: usize,
    smoothing: crate::lm::SmoothingConfig,
) -> Result<NGramLm> {
    let tokens = tokenize(text);
    let vocabulary = Vocabulary::from_tokens(tokens.iter().map(String::as_str), [UNK])?;
    let ids = vocabulary.encode(&tokens)?;
    NGramLm::train(&ids, vocabulary, order, smoothing)
}

/// One evaluated sentence with the features used for correlation analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub prefix_id: String,
    pub strategy: String,
    pub replicate: usize,
    pub sentence_index: usize,
    pub text: String,
    pub num_tokens: usize,
    pub verifiable: bool,
    pub mean_logprob: f64,
    /// tf-idf similarity of the sentence to the prefix's reference document.
    pub tfidf_relevance: f64,
}

/// The label of one evaluated sentence. Over-long sentences carry
/// `verifiable: false` and `NotEnoughInfo` without being checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub prefix_id: String,
    pub strategy: String,
    pub replicate: usize,
    pub sentence_index: usize,
    pub verifiable: bool,
    pub label: Label,
    pub evidence: BTreeSet<String>,
    pub score: f64,
}

impl VerdictRow {
    pub fn verdict(&self) -> Verdict {
        Verdict {
            label: self.label,
            evidence: self.evidence.clone(),
            score: self.score,
        }
    }
}

/// A cell that failed; it is excluded from every aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub strategy: String,
    pub prefix_id: String,
    pub replicate: usize,
    pub message: String,
}

/// What the aggregation needs from one (strategy, prefix, replicate) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub prefix_id: String,
    pub replicate: usize,
    pub tokens: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub relevance: Option<f64>,
}

/// Everything produced by a run, in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub generations: Vec<GenerationRecord>,
    pub sentences: Vec<SentenceRow>,
    pub verdicts: Vec<VerdictRow>,
    pub reference_sentences: Vec<SentenceRow>,
    pub reference_verdicts: Vec<VerdictRow>,
    pub diagnostics: Vec<Diagnostic>,
    /// One row per strategy in config order, then the human row if any.
    pub rows: Vec<ReportRow>,
    pub correlations: Vec<CorrelationRow>,
    /// Mean model perplexity over the reference documents.
    pub reference_perplexity: Option<f64>,
}

impl ExperimentResult {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn is_success(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// Writes every artifact into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        jsonl::write(dir.join("generations.jsonl"), &self.generations)?;
        jsonl::write(dir.join("sentences.jsonl"), &self.sentences)?;
        jsonl::write(dir.join("verdicts.jsonl"), &self.verdicts)?;
        jsonl::write(
            dir.join("reference_sentences.jsonl"),
            &self.reference_sentences,
        )?;
        jsonl::write(
            dir.join("reference_verdicts.jsonl"),
            &self.reference_verdicts,
        )?;
        jsonl::write(dir.join("diagnostics.jsonl"), &self.diagnostics)?;
        if !self.rows.is_empty() {
            write_report(&self.rows, &dir.join("metrics.csv"))?;
        }
        write_correlations(&self.correlations, &dir.join("correlations.csv"))
    }
}

struct Evaluated {
    sentences: Vec<SentenceRow>,
    verdicts: Vec<VerdictRow>,
}

struct CellKey<'a> {
    strategy: &'a str,
    prefix: &'a PrefixEntry,
    replicate: usize,
}

/// Segments, substitutes, filters and checks the first `k` sentences.
fn evaluate_tokens(
    checker: &OracleChecker,
    key: &CellKey<'_>,
    tokens: &[String],
    logprobs: &[f64],
    k: usize,
) -> Evaluated {
    let kb = &checker.kb;
    let reference = kb.document(key.prefix.reference_doc_id());
    let mut out = Evaluated {
        sentences: Vec::new(),
        verdicts: Vec::new(),
    };
    for s in first_k_sentences(&segment_sentences(tokens), k) {
        let text = substitute_referents(&s.processed_text, &key.prefix.title);
        let verdict = if s.verifiable {
            checker.check(&text)
        } else {
            Verdict::not_enough_info(0.0)
        };
        let span = &logprobs[s.start..s.end];
        out.sentences.push(SentenceRow {
            prefix_id: key.prefix.prefix_id.clone(),
            strategy: key.strategy.to_string(),
            replicate: key.replicate,
            sentence_index: s.index,
            text: text.clone(),
            num_tokens: s.token_count(),
            verifiable: s.verifiable,
            mean_logprob: span.iter().sum::<f64>() / span.len() as f64,
            tfidf_relevance: reference.map_or(0.0, |doc| tfidf_relevance(&text, doc, kb)),
        });
        out.verdicts.push(VerdictRow {
            prefix_id: key.prefix.prefix_id.clone(),
            strategy: key.strategy.to_string(),
            replicate: key.replicate,
            sentence_index: s.index,
            verifiable: s.verifiable,
            label: verdict.label,
            evidence: verdict.evidence,
            score: verdict.score,
        });
    }
    out
}

fn prefix_ids(model: &NGramLm, prefix: &PrefixEntry) -> Result<Vec<TokenId>> {
    model
        .vocabulary()
        .encode_lossy(&tokenize(&prefix.prefix_text()))
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Decodes one cell. The RNG stream depends only on the global seed, the
/// prefix id and the replicate.
pub fn generate_record(
    model: &NGramLm,
    prefix: &PrefixEntry,
    name: &str,
    cfg: &StrategyConfig,
    replicate: usize,
    global_seed: u64,
) -> Result<GenerationRecord> {
    let vocab = model.vocabulary();
    let context = prefix_ids(model, prefix)?;
    let seed = stream_seed(global_seed, &prefix.prefix_id, replicate);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let generation = generate(model, &context, cfg, &vocab.terminal_ids(), &mut rng)?;
    let tokens: Vec<String> = vocab
        .decode(&generation.tokens)?
        .into_iter()
        .map(str::to_owned)
        .collect();
    Ok(GenerationRecord {
        prefix_id: prefix.prefix_id.clone(),
        strategy: name.to_string(),
        params: cfg.clone(),
        replicate,
        seed,
        text: detokenize(&tokens),
        tokens,
        token_logprobs: generation.token_logprobs,
        dead_ends: generation.dead_ends,
    })
}

/// Checks the first `k` sentences of one generation.
pub fn check_record(
    checker: &OracleChecker,
    prefix: &PrefixEntry,
    record: &GenerationRecord,
    k: usize,
) -> Result<(Vec<SentenceRow>, Vec<VerdictRow>)> {
    if record.prefix_id != prefix.prefix_id {
        return Err(Error::Input(format!(
            "generation for {:?} checked against prefix {:?}",
            record.prefix_id, prefix.prefix_id
        )));
    }
    if record.tokens.len() != record.token_logprobs.len() {
        return Err(Error::Input(format!(
            "generation for {:?} has {} tokens but {} log-probs",
            record.prefix_id,
            record.tokens.len(),
            record.token_logprobs.len()
        )));
    }
    let key = CellKey {
        strategy: &record.strategy,
        prefix,
        replicate: record.replicate,
    };
    let e = evaluate_tokens(checker, &key, &record.tokens, &record.token_logprobs, k);
    Ok((e.sentences, e.verdicts))
}

/// Generations of every (strategy, prefix, replicate) cell in that order.
/// Failed cells become diagnostics.
pub fn generate_records(
    model: &NGramLm,
    prefixes: &[PrefixEntry],
    strategies: &[StrategyConfig],
    config: &ExperimentConfig,
) -> Result<(Vec<GenerationRecord>, Vec<Diagnostic>)> {
    let names = strategy_names(strategies);
    let mut cells = Vec::new();
    for si in 0..strategies.len() {
        for prefix in prefixes {
            for replicate in 0..config.seeds {
                cells.push((si, prefix, replicate));
            }
        }
    }
    let outcomes: Vec<Result<GenerationRecord>> = worker_pool(config.workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(si, prefix, replicate)| {
                generate_record(
                    model,
                    prefix,
                    &names[si],
                    &strategies[si],
                    replicate,
                    config.global_seed,
                )
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (&(si, prefix, replicate), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => diagnostics.push(Diagnostic {
                strategy: names[si].clone(),
                prefix_id: prefix.prefix_id.clone(),
                replicate,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, diagnostics))
}

/// Sentences and verdicts of checked generations, plus diagnostics for
/// generations that could not be checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checked {
    pub sentences: Vec<SentenceRow>,
    pub verdicts: Vec<VerdictRow>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Checks every record in parallel and keeps record order.
pub fn check_records(
    checker: &OracleChecker,
    prefixes: &[PrefixEntry],
    records: &[GenerationRecord],
    k: usize,
    workers: usize,
) -> Result<Checked> {
    let by_id: BTreeMap<&str, &PrefixEntry> =
        prefixes.iter().map(|p| (p.prefix_id.as_str(), p)).collect();
    let outcomes: Vec<Result<(Vec<SentenceRow>, Vec<VerdictRow>)>> =
        worker_pool(workers)?.install(|| {
            records
                .par_iter()
                .map(|r| match by_id.get(r.prefix_id.as_str()) {
                    Some(p) => check_record(checker, p, r, k),
                    None => Err(Error::Input(format!("unknown prefix id {:?}", r.prefix_id))),
                })
                .collect()
        });
    let mut out = Checked::default();
    for (r, outcome) in records.iter().zip(outcomes) {
        match outcome {
            Ok((sentences, verdicts)) => {
                out.sentences.extend(sentences);
                out.verdicts.extend(verdicts);
            }
            Err(e) => out.diagnostics.push(Diagnostic {
                strategy: r.strategy.clone(),
                prefix_id: r.prefix_id.clone(),
                replicate: r.replicate,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Step log-probs of `continuation` after `prefix`, teacher-forced.
fn forced_logprobs<M: LanguageModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
    continuation: &[TokenId],
) -> Result<Vec<f64>> {
    let mut context = prefix.to_vec();
    let mut out = Vec::with_capacity(continuation.len());
    for &t in continuation {
        out.push(model.next_distribution(&context)?.logprob(t));
        context.push(t);
    }
    Ok(out)
}

/// The reference document of `prefix`, tokenized and cut to `max_tokens`.
pub fn reference_tokens(
    kb: &KnowledgeBase,
    prefix: &PrefixEntry,
    max_tokens: usize,
) -> Option<Vec<String>> {
    let mut tokens = tokenize(kb.document(prefix.reference_doc_id())?);
    tokens.truncate(max_tokens);
    (!tokens.is_empty()).then_some(tokens)
}

/// Human-reference cell without model scores; `mean_logprob` is zero.
pub fn reference_summary(
    checker: &OracleChecker,
    prefix: &PrefixEntry,
    max_tokens: usize,
    k: usize,
) -> Option<CellSummary> {
    let tokens = reference_tokens(&checker.kb, prefix, max_tokens)?;
    let key = CellKey {
        strategy: HUMAN,
        prefix,
        replicate: 0,
    };
    let e = evaluate_tokens(checker, &key, &tokens, &vec![0.0; tokens.len()], k);
    Some(CellSummary {
        prefix_id: prefix.prefix_id.clone(),
        replicate: 0,
        verdicts: e.verdicts.iter().map(VerdictRow::verdict).collect(),
        relevance: relevance(&checker.kb, prefix, &detokenize(&tokens)),
        tokens,
    })
}

struct Reference {
    tokens: Vec<String>,
    evaluated: Evaluated,
    perplexity: f64,
}

fn run_reference(
    prepared: &Prepared,
    prefix: &PrefixEntry,
    max_tokens: usize,
    k: usize,
) -> Result<Option<Reference>> {
    let Some(tokens) = reference_tokens(prepared.kb(), prefix, max_tokens) else {
        return Ok(None);
    };
    let ids = prepared.model.vocabulary().encode_lossy(&tokens)?;
    let logprobs = forced_logprobs(&prepared.model, &prefix_ids(&prepared.model, prefix)?, &ids)?;
    let key = CellKey {
        strategy: HUMAN,
        prefix,
        replicate: 0,
    };
    Ok(Some(Reference {
        evaluated: evaluate_tokens(&prepared.checker, &key, &tokens, &logprobs, k),
        perplexity: perplexity(&prepared.model, &ids)?,
        tokens,
    }))
}

/// Metric row for one strategy from its successful cells.
///
/// `human_4grams` maps prefix ids to the distinct-4-gram count of their
/// reference text; cells without a positive reference count are skipped in
/// the proportion. `unique_supported` is averaged over replicates.
pub fn aggregate(
    cells: &[CellSummary],
    human_4grams: &BTreeMap<String, usize>,
    k: usize,
) -> Result<MetricReport> {
    if cells.is_empty() {
        return Err(Error::Input("no successful cells to aggregate".into()));
    }
    let verdicts: Vec<PrefixVerdicts> = cells
        .iter()
        .map(|c| PrefixVerdicts {
            prefix_id: c.prefix_id.clone(),
            verdicts: c.verdicts.clone(),
        })
        .collect();
    let mut report = compute_metrics(&verdicts, k)?;
    let machine: Vec<f64> = cells
        .iter()
        .map(|c| distinct_ngrams(&c.tokens, 4) as f64)
        .collect();
    let human: Vec<f64> = cells
        .iter()
        .map(|c| human_4grams.get(&c.prefix_id).map_or(0.0, |&h| h as f64))
        .collect();
    report.distinct_4grams = machine.iter().sum::<f64>() / machine.len() as f64;
    (report.fourgram_proportion, report.fourgram_skipped) = fourgram_proportion(&machine, &human)?;
    let replicates: BTreeSet<usize> = cells.iter().map(|c| c.replicate).collect();
    report.unique_supported /= replicates.len() as f64;
    let relevances: Vec<f64> = cells.iter().filter_map(|c| c.relevance).collect();
    if !relevances.is_empty() {
        report.tfidf_relevance = relevances.iter().sum::<f64>() / relevances.len() as f64;
    }
    Ok(report)
}

fn relevance(kb: &KnowledgeBase, prefix: &PrefixEntry, text: &str) -> Option<f64> {
    kb.document(prefix.reference_doc_id())
        .map(|doc| tfidf_relevance(text, doc, kb))
}

/// Distinct-4-gram counts of every available reference text.
pub fn human_fourgrams(
    kb: &KnowledgeBase,
    prefixes: &[PrefixEntry],
    max_tokens: usize,
) -> BTreeMap<String, usize> {
    prefixes
        .iter()
        .filter_map(|p| {
            Some((
                p.prefix_id.clone(),
                distinct_ngrams(&reference_tokens(kb, p, max_tokens)?, 4),
            ))
        })
        .collect()
}

/// Stage outputs that metric rows are built from.
#[derive(Debug, Clone, Copy)]
pub struct RowInputs<'a> {
    pub generations: &'a [GenerationRecord],
    pub verdicts: &'a [VerdictRow],
    pub diagnostics: &'a [Diagnostic],
    pub prefixes: &'a [PrefixEntry],
    /// Enables the relevance column.
    pub kb: Option<&'a KnowledgeBase>,
    pub human_4grams: &'a BTreeMap<String, usize>,
    pub k: usize,
}

/// One metric row per named strategy. `failed_cells` counts the diagnostics
/// of that strategy; a strategy whose cells all failed gets no report.
pub fn strategy_rows(
    strategies: &[(String, Option<StrategyConfig>)],
    inputs: RowInputs<'_>,
) -> Result<Vec<ReportRow>> {
    let RowInputs {
        generations,
        verdicts,
        diagnostics,
        prefixes,
        kb,
        human_4grams,
        k,
    } = inputs;
    let mut grouped: BTreeMap<(&str, &str, usize), Vec<Verdict>> = BTreeMap::new();
    for v in verdicts {
        grouped
            .entry((v.strategy.as_str(), v.prefix_id.as_str(), v.replicate))
            .or_default()
            .push(v.verdict());
    }
    let by_id: BTreeMap<&str, &PrefixEntry> =
        prefixes.iter().map(|p| (p.prefix_id.as_str(), p)).collect();
    let mut rows = Vec::new();
    for (name, cfg) in strategies {
        let cells: Vec<CellSummary> = generations
            .iter()
            .filter(|g| &g.strategy == name)
            .map(|g| CellSummary {
                prefix_id: g.prefix_id.clone(),
                replicate: g.replicate,
                tokens: g.tokens.clone(),
                verdicts: grouped
                    .get(&(g.strategy.as_str(), g.prefix_id.as_str(), g.replicate))
                    .cloned()
                    .unwrap_or_default(),
                relevance: kb
                    .zip(by_id.get(g.prefix_id.as_str()))
                    .and_then(|(kb, p)| relevance(kb, p, &g.text)),
            })
            .collect();
        let report = if cells.is_empty() {
            None
        } else {
            Some(aggregate(&cells, human_4grams, k)?)
        };
        rows.push(ReportRow {
            name: name.clone(),
            config: cfg.clone(),
            report,
            failed_cells: diagnostics.iter().filter(|d| &d.strategy == name).count(),
        });
    }
    Ok(rows)
}

const FEATURES: [&str; 4] = [
    "num_tokens",
    "mean_logprob",
    "tfidf_relevance",
    "prefix_perplexity",
];

/// Pearson correlation of each sentence feature with being supported and
/// with being verified, over every checked generated sentence.
fn correlations(
    sentences: &[SentenceRow],
    verdicts: &[VerdictRow],
    prefix_perplexity: &BTreeMap<&str, f64>,
) -> Vec<CorrelationRow> {
    let rows: Vec<(&SentenceRow, &VerdictRow)> = sentences
        .iter()
        .zip(verdicts)
        .filter(|(s, _)| s.verifiable)
        .collect();
    let feature = |name: &str, s: &SentenceRow| match name {
        "num_tokens" => s.num_tokens as f64,
        "mean_logprob" => s.mean_logprob,
        "tfidf_relevance" => s.tfidf_relevance,
        _ => prefix_perplexity
            .get(s.prefix_id.as_str())
            .copied()
            .unwrap_or(f64::NAN),
    };
    let mut out = Vec::new();
    for target in ["supported", "verified"] {
        let y: Vec<f64> = rows
            .iter()
            .map(|(_, v)| {
                let hit = match target {
                    "supported" => v.label == Label::Supported,
                    _ => v.label.is_verified(),
                };
                f64::from(u8::from(hit))
            })
            .collect();
        for name in FEATURES {
            let x: Vec<f64> = rows.iter().map(|(s, _)| feature(name, s)).collect();
            let usable = x.iter().all(|v| v.is_finite());
            out.push(CorrelationRow {
                feature: name.to_string(),
                target: target.to_string(),
                samples: x.len(),
                pearson: if usable { pearson(&x, &y).ok() } else { None },
            });
        }
    }
    out
}

/// Runs every (strategy, prefix, replicate) cell of `strategies` and aggregates.
///
/// Cells run in parallel on `config.workers` threads; results are collected
/// in (strategy, prefix, replicate) order so output never depends on scheduling.
pub fn run_strategies(
    prepared: &Prepared,
    config: &ExperimentConfig,
    strategies: &[StrategyConfig],
) -> Result<ExperimentResult> {
    config.validate()?;
    let (generations, mut diagnostics) =
        generate_records(&prepared.model, &prepared.prefixes, strategies, config)?;
    let checked = check_records(
        &prepared.checker,
        &prepared.prefixes,
        &generations,
        config.k,
        config.workers,
    )?;
    diagnostics.extend(checked.diagnostics);
    let failed: BTreeSet<(&str, &str, usize)> = diagnostics
        .iter()
        .map(|d| (d.strategy.as_str(), d.prefix_id.as_str(), d.replicate))
        .collect();
    let generations: Vec<GenerationRecord> = generations
        .into_iter()
        .filter(|g| !failed.contains(&(g.strategy.as_str(), g.prefix_id.as_str(), g.replicate)))
        .collect();

    let references: Vec<Result<Option<Reference>>> = worker_pool(config.workers)?.install(|| {
        prepared
            .prefixes
            .par_iter()
            .map(|p| run_reference(prepared, p, config.max_tokens, config.k))
            .collect()
    });
    let mut result = ExperimentResult {
        generations: Vec::new(),
        sentences: checked.sentences,
        verdicts: checked.verdicts,
        reference_sentences: Vec::new(),
        reference_verdicts: Vec::new(),
        diagnostics: Vec::new(),
        rows: Vec::new(),
        correlations: Vec::new(),
        reference_perplexity: None,
    };
    let mut human_4grams = BTreeMap::new();
    let mut human_cells = Vec::new();
    let mut perplexities = Vec::new();
    for (prefix, reference) in prepared.prefixes.iter().zip(references) {
        match reference {
            Ok(Some(r)) => {
                human_4grams.insert(prefix.prefix_id.clone(), distinct_ngrams(&r.tokens, 4));
                if r.perplexity.is_finite() {
                    perplexities.push(r.perplexity);
                }
                human_cells.push(CellSummary {
                    prefix_id: prefix.prefix_id.clone(),
                    replicate: 0,
                    verdicts: r
                        .evaluated
                        .verdicts
                        .iter()
                        .map(VerdictRow::verdict)
                        .collect(),
                    relevance: relevance(prepared.kb(), prefix, &detokenize(&r.tokens)),
                    tokens: r.tokens,
                });
                result.reference_sentences.extend(r.evaluated.sentences);
                result.reference_verdicts.extend(r.evaluated.verdicts);
            }
            Ok(None) => {}
            Err(e) => diagnostics.push(Diagnostic {
                strategy: HUMAN.into(),
                prefix_id: prefix.prefix_id.clone(),
                replicate: 0,
                message: e.to_string(),
            }),
        }
    }
    if !perplexities.is_empty() {
        result.reference_perplexity =
            Some(perplexities.iter().sum::<f64>() / perplexities.len() as f64);
    }

    let named: Vec<(String, Option<StrategyConfig>)> = strategy_names(strategies)
        .into_iter()
        .zip(strategies.iter().cloned().map(Some))
        .collect();
    result.rows = strategy_rows(
        &named,
        RowInputs {
            generations: &generations,
            verdicts: &result.verdicts,
            diagnostics: &diagnostics,
            prefixes: &prepared.prefixes,
            kb: Some(prepared.kb()),
            human_4grams: &human_4grams,
            k: config.k,
        },
    )?;
    if !human_cells.is_empty() {
        result.rows.push(ReportRow {
            name: HUMAN.into(),
            config: None,
            report: Some(aggregate(&human_cells, &human_4grams, config.k)?),
            failed_cells: 0,
        });
    }

    let prefix_perplexity: BTreeMap<&str, f64> = prepared
        .prefixes
        .iter()
        .filter_map(|p| {
            let ids = prefix_ids(&prepared.model, p).ok()?;
            Some((
                p.prefix_id.as_str(),
                perplexity(&prepared.model, &ids).ok()?,
            ))
        })
        .collect();
    result.correlations = correlations(&result.sentences, &result.verdicts, &prefix_perplexity);
    result.generations = generations;
    result.diagnostics = diagnostics;
    Ok(result)
}

/// Loads inputs, runs every configured strategy and writes all artifacts
/// to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let prepared = Prepared::load(config)?;
    let result = run_strategies(&prepared, config, &config.effective_strategies())?;
    result.write(&config.output_dir)?;
    Ok(result)
}
