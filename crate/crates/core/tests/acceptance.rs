//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one PASS or FAIL line even when all succeed.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{all_sequences, random_table_model, repeated_ngrams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use verdec::decode::{
    decode_beam, decode_delayed_bs, decode_greedy, decode_group_bs, decode_sibling_bs,
    sample_top_k, sample_top_p, GenerationRecord, Limits,
};
use verdec::factcheck::Verdict;
use verdec::harness::{
    generate_records, parse_grid, run_experiment, run_strategies, sweep_prepared, ExperimentResult,
    Objective, Prepared,
};
use verdec::lm::{
    perplexity, sequence_logprob, tokenize, LanguageModel, TableModel, TokenDistribution, TokenId,
};
use verdec::metrics::{compute_metrics, fourgram_proportion, pearson, PrefixVerdicts};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exhaustive_best(model: &TableModel, prefix: &[TokenId], len: usize) -> Vec<TokenId> {
    let mut best: Option<(Vec<TokenId>, f64)> = None;
    for seq in all_sequences(model.vocab_size(), len) {
        let score = sequence_logprob(model, prefix, &seq).unwrap();
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((seq, score));
        }
    }
    best.unwrap().0
}

fn beam_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let models = 120;
    for i in 0..models {
        let vocab = rng.gen_range(2..=6);
        let len = rng.gen_range(1..=5);
        let order = rng.gen_range(1..=3);
        let model = random_table_model(rng.gen(), vocab, order);
        let want = exhaustive_best(&model, &[0], len);
        let got = decode_beam(&model, &[0], vocab.pow(len as u32), &Limits::new(len))
            .map_err(|e| e.to_string())?;
        ensure(got.tokens == want, || {
            format!("model {i}: beam {:?} vs exhaustive {want:?}", got.tokens)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{models} models agree in {elapsed:.2?}"))
}

fn reduction_identities() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let models = 60;
    for i in 0..models {
        let vocab = rng.gen_range(2..=6);
        let len = rng.gen_range(1..=8);
        let order = rng.gen_range(1..=3);
        let beam = rng.gen_range(1..=5);
        let groups = rng.gen_range(1..=3);
        let model = random_table_model(rng.gen(), vocab, order);
        let limits = Limits::new(len);
        let p = [0];
        let e = |x: verdec::Error| x.to_string();
        let bs = decode_beam(&model, &p, beam, &limits).map_err(e)?.tokens;
        let checks = [
            (
                "Beam(1) = greedy",
                decode_beam(&model, &p, 1, &limits).map_err(e)?.tokens,
                decode_greedy(&model, &p, &limits).map_err(e)?.tokens,
            ),
            (
                "GroupBS(G=1) = BS",
                decode_group_bs(&model, &p, beam, 1, 0.7, &limits)
                    .map_err(e)?
                    .tokens,
                bs.clone(),
            ),
            (
                "GroupBS(penalty=0) = BS",
                decode_group_bs(&model, &p, beam * groups, groups, 0.0, &limits)
                    .map_err(e)?
                    .tokens,
                decode_beam(&model, &p, beam * groups, &limits)
                    .map_err(e)?
                    .tokens,
            ),
            (
                "SiblingBS(penalty=0) = BS",
                decode_sibling_bs(&model, &p, beam, 0.0, &limits)
                    .map_err(e)?
                    .tokens,
                bs.clone(),
            ),
            (
                "DelayedBS(L=0) = BS",
                decode_delayed_bs(
                    &model,
                    &p,
                    vocab,
                    beam,
                    0,
                    &[0],
                    &limits,
                    &mut ChaCha20Rng::seed_from_u64(i),
                )
                .map_err(e)?
                .tokens,
                bs.clone(),
            ),
        ];
        for (name, a, b) in checks {
            ensure(a == b, || {
                format!("model {i}: {name} fails: {a:?} vs {b:?}")
            })?;
        }
    }
    Ok(format!("5 identities on {models} models"))
}

/// Analytic renormalized probabilities over the first `support` ranks.
fn truncated(probs: &[f64], support: usize) -> Vec<f64> {
    let mass: f64 = probs[..support].iter().sum();
    (0..probs.len())
        .map(|i| if i < support { probs[i] / mass } else { 0.0 })
        .collect()
}

fn within_three_sigma(counts: &[usize], expected: &[f64], n: usize) -> Result<(), String> {
    for (t, (&c, &q)) in counts.iter().zip(expected).enumerate() {
        let mean = n as f64 * q;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        ensure((c as f64 - mean).abs() <= 3.0 * sigma, || {
            format!(
                "token {t}: {c} draws, expected {mean:.1} +- {:.1}",
                3.0 * sigma
            )
        })?;
    }
    Ok(())
}

fn sampling_conformance() -> Outcome {
    // Sorted descending, so truncation keeps a prefix of the indices.
    let probs = [0.37, 0.26, 0.19, 0.11, 0.07];
    let dist = TokenDistribution::from_weights(&probs).unwrap();
    let n = 100_000;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut draw = |f: &mut dyn FnMut(&mut ChaCha20Rng) -> TokenId| {
        let mut counts = vec![0usize; probs.len()];
        for _ in 0..n {
            counts[f(&mut rng) as usize] += 1;
        }
        counts
    };
    for k in [1, 2, 5] {
        let counts = draw(&mut |r| sample_top_k(&dist, k, r).unwrap());
        within_three_sigma(&counts, &truncated(&probs, k), n)
            .map_err(|m| format!("top-k k={k}: {m}"))?;
    }
    for p in [0.4, 0.8, 1.0] {
        let mut cum = 0.0;
        let support = probs
            .iter()
            .position(|q| {
                cum += q;
                cum >= p - 1e-12
            })
            .unwrap()
            + 1;
        let counts = draw(&mut |r| sample_top_p(&dist, p, r).unwrap());
        within_three_sigma(&counts, &truncated(&probs, support), n)
            .map_err(|m| format!("top-p p={p}: {m}"))?;
    }
    let peaked = TokenDistribution::from_weights(&[0.5, 0.3, 0.2]).unwrap();
    for _ in 0..n {
        let t = sample_top_p(&peaked, 0.4, &mut rng).unwrap();
        ensure(t == 0, || {
            format!("top-p 0.4 on (0.5, 0.3, 0.2) drew token {t}")
        })?;
    }
    Ok(format!(
        "6 samplers x {n} draws within 3 sigma; p=0.4 deterministic"
    ))
}

fn desk_prepared() -> (
    tempfile::TempDir,
    verdec::harness::ExperimentConfig,
    Prepared,
) {
    let out = tempfile::tempdir().unwrap();
    let config = common::desk_config(out.path());
    let prepared = Prepared::load(&config).unwrap();
    (out, config, prepared)
}

fn ids(prepared: &Prepared, record: &GenerationRecord) -> Vec<TokenId> {
    let vocab = prepared.model.vocabulary();
    let prefix = prepared
        .prefixes
        .iter()
        .find(|p| p.prefix_id == record.prefix_id)
        .unwrap();
    let mut all = vocab
        .encode_lossy(&tokenize(&prefix.prefix_text()))
        .unwrap();
    all.extend(vocab.encode(&record.tokens).unwrap());
    all
}

fn blocking_invariant() -> Outcome {
    let (_out, mut config, mut prepared) = desk_prepared();
    prepared.prefixes.truncate(20);
    config.strategies = ["bs:n=3", "bs:n=20", "top-k:n=3", "top-k:n=20"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let (records, diagnostics) = generate_records(
        &prepared.model,
        &prepared.prefixes,
        &config.effective_strategies(),
        &config,
    )
    .map_err(|e| e.to_string())?;
    ensure(diagnostics.is_empty(), || {
        format!("{} failed cells", diagnostics.len())
    })?;
    ensure(records.len() == 4 * 20 * 3, || {
        format!("{} records", records.len())
    })?;
    for r in &records {
        let n = r.params.blocking_order.unwrap();
        ensure(r.tokens.len() == 256, || {
            format!("{} {}: {} tokens", r.strategy, r.prefix_id, r.tokens.len())
        })?;
        let dups = repeated_ngrams(&ids(&prepared, r), n);
        ensure(dups == 0, || {
            format!(
                "{} {} seed {}: {dups} repeated {n}-grams",
                r.strategy, r.prefix_id, r.replicate
            )
        })?;
    }
    Ok(format!(
        "{} generations of 256 tokens, no repeated n-grams",
        records.len()
    ))
}

fn metric_formulas() -> Outcome {
    let nei = || Verdict::not_enough_info(0.0);
    let fixture = vec![
        PrefixVerdicts {
            prefix_id: "p1".into(),
            verdicts: vec![
                Verdict::supported(["f1"]),
                Verdict::supported(["f2"]),
                nei(),
                nei(),
                nei(),
            ],
        },
        PrefixVerdicts {
            prefix_id: "p2".into(),
            verdicts: vec![
                Verdict::supported(["f3"]),
                Verdict::refuted(["f4"]),
                Verdict::refuted(["f5"]),
                Verdict::refuted(["f6"]),
                nei(),
            ],
        },
    ];
    let r = compute_metrics(&fixture, 5).map_err(|e| e.to_string())?;
    ensure(
        (r.spg - 0.30).abs() < 1e-12 && (r.spv - 0.625).abs() < 1e-12,
        || format!("SPG {} SPV {}", r.spg, r.spv),
    )?;
    let looping = vec![PrefixVerdicts {
        prefix_id: "p".into(),
        verdicts: vec![Verdict::supported(["f1"]); 5],
    }];
    let r = compute_metrics(&looping, 5).map_err(|e| e.to_string())?;
    ensure(r.spg == 1.0 && (r.uspg - 0.2).abs() < 1e-12, || {
        format!("repetition SPG {} USPG {}", r.spg, r.uspg)
    })?;

    // Without equivalent sentences deduplication changes nothing.
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for case in 0..200 {
        let mut fact = 0;
        let all: Vec<PrefixVerdicts> = (0..rng.gen_range(1..6))
            .map(|p| PrefixVerdicts {
                prefix_id: format!("p{p}"),
                verdicts: (0..rng.gen_range(1..=5))
                    .map(|_| {
                        fact += 1;
                        match rng.gen_range(0..3) {
                            0 => Verdict::supported([format!("f{fact}")]),
                            1 => Verdict::refuted([format!("f{fact}")]),
                            _ => nei(),
                        }
                    })
                    .collect(),
            })
            .collect();
        // At most one NotEnoughInfo per prefix keeps every sentence distinct.
        let all: Vec<PrefixVerdicts> = all
            .into_iter()
            .map(|mut p| {
                let mut seen_nei = false;
                p.verdicts
                    .retain(|v| v.label.is_verified() || !std::mem::replace(&mut seen_nei, true));
                p
            })
            .collect();
        let r = compute_metrics(&all, 5).map_err(|e| e.to_string())?;
        ensure(r.uspg == r.spg && r.uspv == r.spv, || {
            format!(
                "case {case}: SPG {} USPG {} SPV {} USPV {}",
                r.spg, r.uspg, r.spv, r.uspv
            )
        })?;
    }
    Ok("hand fixtures exact; USPG=SPG and USPV=SPV on 200 duplicate-free cases".into())
}

fn fourgram_arithmetic() -> Outcome {
    let (proportion, skipped) =
        fourgram_proportion(&[143.52; 4], &[222.48; 4]).map_err(|e| e.to_string())?;
    let pct = 100.0 * proportion;
    ensure((pct - 64.51).abs() <= 0.01 && skipped == 0, || {
        format!("{pct:.4}%")
    })?;
    Ok(format!("{pct:.4}%"))
}

fn directional_trend(result: &ExperimentResult) -> Outcome {
    let get = |name: &str| {
        result
            .row(name)
            .and_then(|r| r.report.clone())
            .ok_or_else(|| format!("no report for {name}"))
    };
    let (topk, bs, delayed, blocked) = (get("top-k")?, get("BS")?, get("DelayedBS")?, get("BS_b")?);
    let d = |r: &verdec::metrics::MetricReport| r.distinct_4grams;
    ensure(d(&topk) >= d(&delayed) && d(&delayed) >= d(&bs), || {
        format!(
            "distinct 4-grams top-k {:.2} DelayedBS {:.2} BS {:.2}",
            d(&topk),
            d(&delayed),
            d(&bs)
        )
    })?;
    ensure(bs.spv >= delayed.spv && delayed.spv >= topk.spv, || {
        format!(
            "SPV BS {:.4} DelayedBS {:.4} top-k {:.4}",
            bs.spv, delayed.spv, topk.spv
        )
    })?;
    ensure(blocked.uspg >= bs.uspg, || {
        format!("USPG BS_b {:.4} BS {:.4}", blocked.uspg, bs.uspg)
    })?;
    Ok(format!(
        "4-grams {:.1} >= {:.1} >= {:.1}; SPV {:.3} >= {:.3} >= {:.3}; USPG BS_b {:.3} >= BS {:.3}",
        d(&topk),
        d(&delayed),
        d(&bs),
        bs.spv,
        delayed.spv,
        topk.spv,
        blocked.uspg,
        bs.uspg
    ))
}

fn table_trend() -> (Outcome, Option<ExperimentResult>) {
    let start = Instant::now();
    let (_out, mut config, prepared) = desk_prepared();
    config.strategies = ["top-k", "bs", "delayed-bs", "bs-b"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let result = match run_strategies(&prepared, &config, &config.effective_strategies()) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let elapsed = start.elapsed();
    let outcome = directional_trend(&result).and_then(|msg| {
        ensure(elapsed < Duration::from_secs(120), || {
            format!("took {elapsed:?}")
        })?;
        ensure(result.is_success(), || {
            format!("{} failed cells", result.diagnostics.len())
        })?;
        Ok(format!("{msg} ({elapsed:.1?})"))
    });
    (outcome, Some(result))
}

fn delay_ablation() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let config = common::desk_config(out.path());
    let validation = config
        .validation_prefixes
        .clone()
        .ok_or("no validation prefixes")?;
    let prepared = Prepared::load_with_prefixes(&config, &validation).map_err(|e| e.to_string())?;
    let grid = parse_grid("delayed-bs:delay=1|16").map_err(|e| e.to_string())?;
    let result = sweep_prepared(&prepared, &config, &grid, Objective::UniqueSupported)
        .map_err(|e| e.to_string())?;
    let count = |i: usize| {
        result.rows[i]
            .report
            .as_ref()
            .map(|r| r.unique_supported)
            .ok_or("failed grid point")
    };
    let (short, long) = (count(0)?, count(1)?);
    ensure(short >= long, || format!("L=1 {short:.2} < L=16 {long:.2}"))?;
    Ok(format!("unique supported L=1 {short:.2} >= L=16 {long:.2}"))
}

fn numerics(trend: Option<&ExperimentResult>) -> Outcome {
    let uniform = TableModel::uniform(8);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let corpus: Vec<TokenId> = (0..1000).map(|_| rng.gen_range(0..8)).collect();
    let ppl = perplexity(&uniform, &corpus).map_err(|e| e.to_string())?;
    ensure((ppl - 8.0).abs() < 1e-9, || {
        format!("uniform perplexity {ppl}")
    })?;

    let x = [1.0, 2.0, 3.0, 4.0];
    for (y, want) in [
        ([2.0, 4.0, 6.0, 8.0], 1.0),
        ([8.0, 6.0, 4.0, 2.0], -1.0),
        ([0.5, 1.5, 2.5, 3.5], 1.0),
    ] {
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        ensure((r - want).abs() < 1e-12, || {
            format!("pearson {r} vs {want}")
        })?;
    }

    // Every distribution the desk model emits along the generated paths.
    let (_out, _config, prepared) = desk_prepared();
    let records = trend.ok_or("no generations to replay")?.generations.clone();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for r in &records {
        let all = ids(&prepared, r);
        let start = all.len() - r.tokens.len();
        for end in start..all.len() {
            let dist = prepared
                .model
                .next_distribution(&all[..end])
                .map_err(|e| e.to_string())?;
            let mass: f64 = dist.logprobs().iter().map(|lp| lp.exp()).sum();
            worst = worst.max((mass - 1.0).abs());
            checked += 1;
        }
    }
    ensure(worst < 1e-9, || {
        format!("a distribution sums to 1 +- {worst:e}")
    })?;
    Ok(format!(
        "perplexity {ppl}; pearson exact; {checked} distributions within {worst:.1e}"
    ))
}

fn reproducibility() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_experiment(&common::desk_config(dir.path())).map_err(|e| e.to_string())?;
    }
    let mut sizes = BTreeMap::new();
    for name in ["generations.jsonl", "verdicts.jsonl", "metrics.csv"] {
        let x = std::fs::read(a.path().join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(name)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{name} differs"))?;
        sizes.insert(name, x.len());
    }
    Ok(format!("identical artifacts {sizes:?}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg}"),
        Err(msg) => {
            failures += 1;
            println!("criterion {n:>2} FAIL  {name}: {msg}");
        }
    };
    report(1, "beam optimality", beam_optimality());
    report(2, "reduction identities", reduction_identities());
    report(3, "sampling conformance", sampling_conformance());
    report(4, "blocking invariant", blocking_invariant());
    report(5, "metric formulas", metric_formulas());
    report(6, "4-gram proportion", fourgram_arithmetic());
    let (trend, result) = table_trend();
    report(7, "directional trend", trend);
    report(8, "delay ablation", delay_ablation());
    report(9, "numerics", numerics(result.as_ref()));
    report(10, "reproducibility", reproducibility());
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
