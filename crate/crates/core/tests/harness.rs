mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;

use verdec::decode::StrategyConfig;
use verdec::factcheck::Label;
use verdec::harness::desk::{generate, DeskSpec};
use verdec::harness::{
    parse_grid, run_experiment, run_strategies, sweep, sweep_prepared, ExperimentConfig, Objective,
    Prepared, HUMAN,
};
use verdec::lm::{tokenize, LanguageModel};
use verdec::textproc::segment_sentences;

/// A small fixture: 14 people, 4 validation and 10 test prefixes.
fn small_fixture(dir: &Path) -> ExperimentConfig {
    let spec = DeskSpec {
        entities: 14,
        articles_per_entity: 4,
        validation: 4,
        ..DeskSpec::default()
    };
    generate(&spec).unwrap().write(dir).unwrap();
    let mut c = ExperimentConfig::new(
        dir.join("corpus.txt"),
        dir.join("prefixes_test.jsonl"),
        dir.join("kb"),
        dir.join("out"),
    );
    c.validation_prefixes = Some(dir.join("prefixes_validation.jsonl"));
    c.model.order = 4;
    c.model.smoothing = verdec::lm::SmoothingConfig::AddK { k: 0.01 };
    c.max_tokens = 64;
    c.strategies = vec!["top-k".parse().unwrap(), "bs:beam_size=4".parse().unwrap()];
    c
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const ARTIFACTS: [&str; 8] = [
    "generations.jsonl",
    "sentences.jsonl",
    "verdicts.jsonl",
    "reference_sentences.jsonl",
    "reference_verdicts.jsonl",
    "diagnostics.jsonl",
    "metrics.csv",
    "correlations.csv",
];

#[test]
fn two_strategies_three_seeds_ten_prefixes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let result = run_experiment(&config).unwrap();
    assert!(result.is_success());
    assert_eq!(result.generations.len(), 60);
    let strategy_rows: Vec<_> = result.rows.iter().filter(|r| r.name != HUMAN).collect();
    assert_eq!(strategy_rows.len(), 2);
    assert!(result.row(HUMAN).is_some());
    for name in ARTIFACTS {
        assert!(config.output_dir.join(name).exists(), "{name}");
    }
    assert!(result.generations.iter().all(|g| g.tokens.len() == 64));

    // Deterministic strategies give bit-identical replicates.
    let mut by_prefix: BTreeMap<&str, Vec<&Vec<String>>> = BTreeMap::new();
    for g in result.generations.iter().filter(|g| g.strategy == "BS") {
        by_prefix.entry(&g.prefix_id).or_default().push(&g.tokens);
    }
    assert_eq!(by_prefix.len(), 10);
    for reps in by_prefix.values() {
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|r| r == &reps[0]));
    }
}

#[test]
fn runs_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = small_fixture(tmp.path());
    a.strategies.push("delayed-bs".parse().unwrap());
    a.workers = 1;
    let mut b = a.clone();
    b.workers = 4;
    b.output_dir = tmp.path().join("out-b");
    run_experiment(&a).unwrap();
    run_experiment(&b).unwrap();
    for name in ARTIFACTS {
        assert_eq!(
            read(&a.output_dir.join(name)),
            read(&b.output_dir.join(name)),
            "{name}"
        );
    }
}

#[test]
fn every_sentence_gets_exactly_one_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let prepared = Prepared::load(&config).unwrap();
    let result = run_strategies(&prepared, &config, &config.effective_strategies()).unwrap();
    assert_eq!(result.sentences.len(), result.verdicts.len());
    let mut keys = BTreeSet::new();
    for (s, v) in result.sentences.iter().zip(&result.verdicts) {
        let key = (&s.strategy, &s.prefix_id, s.replicate, s.sentence_index);
        assert_eq!(
            key,
            (&v.strategy, &v.prefix_id, v.replicate, v.sentence_index)
        );
        assert!(keys.insert(key), "duplicate verdict for {key:?}");
        assert_eq!(s.verifiable, v.verifiable);
        if !v.verifiable {
            assert_eq!(v.label, Label::NotEnoughInfo);
        }
    }
    for g in &result.generations {
        let expected = segment_sentences(&g.tokens).len().min(config.k);
        let got = result
            .verdicts
            .iter()
            .filter(|v| {
                v.strategy == g.strategy && v.prefix_id == g.prefix_id && v.replicate == g.replicate
            })
            .count();
        assert_eq!(got, expected);
    }
    let generated = result.verdicts.len();
    let verified = result
        .verdicts
        .iter()
        .filter(|v| v.label.is_verified())
        .count();
    let nei = result
        .verdicts
        .iter()
        .filter(|v| v.label == Label::NotEnoughInfo)
        .count();
    assert_eq!(generated, verified + nei);

    // Verdicts partition by prefix with no orphans.
    let ids: BTreeSet<&str> = prepared
        .prefixes
        .iter()
        .map(|p| p.prefix_id.as_str())
        .collect();
    let mut per_prefix: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &result.verdicts {
        assert!(ids.contains(v.prefix_id.as_str()));
        *per_prefix.entry(&v.prefix_id).or_default() += 1;
    }
    assert_eq!(per_prefix.values().sum::<usize>(), generated);
}

#[test]
fn recorded_logprobs_match_the_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_fixture(tmp.path());
    config.strategies.push("delayed-bs".parse().unwrap());
    config.strategies.push("sibling-bs".parse().unwrap());
    let prepared = Prepared::load(&config).unwrap();
    let result = run_strategies(&prepared, &config, &config.effective_strategies()).unwrap();
    let vocab = prepared.model.vocabulary();
    for g in &result.generations {
        let prefix = prepared
            .prefixes
            .iter()
            .find(|p| p.prefix_id == g.prefix_id)
            .unwrap();
        let mut context = vocab
            .encode_lossy(&tokenize(&prefix.prefix_text()))
            .unwrap();
        let ids = vocab.encode(&g.tokens).unwrap();
        for (i, &t) in ids.iter().enumerate() {
            let lp = prepared
                .model
                .next_distribution(&context)
                .unwrap()
                .logprob(t);
            assert!(
                (lp - g.token_logprobs[i]).abs() < 1e-12,
                "{} step {i}",
                g.strategy
            );
            context.push(t);
        }
    }
}

#[test]
fn failed_cells_are_recorded_and_excluded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_fixture(tmp.path());
    config.strategies.push("top-k:k=100000".parse().unwrap());
    let result = run_experiment(&config).unwrap();
    assert!(!result.is_success());
    assert_eq!(result.diagnostics.len(), 30);
    assert_eq!(result.generations.len(), 60);
    let names = verdec::harness::strategy_names(&config.effective_strategies());
    let failed = result.row(&names[2]).unwrap();
    assert_eq!(failed.failed_cells, 30);
    assert!(failed.report.is_none());
    let kept = result.row(&names[0]).unwrap();
    assert_eq!(kept.failed_cells, 0);
    assert!(kept.report.is_some());
}

#[test]
fn singleton_sweep_returns_its_only_point() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let grid = parse_grid("bs:beam_size=3").unwrap();
    let result = sweep(&config, &grid, Objective::Uspg).unwrap();
    assert_eq!(result.rows.len(), 1);
    assert_eq!(result.best, 0);
    assert_eq!(
        result.best_config(),
        &grid[0].clone().with_max_tokens(config.max_tokens)
    );
    assert!(config.output_dir.join("sweep.csv").exists());
}

#[test]
fn top_k_grid_gives_three_rows_with_objectives() {
    let out = tempfile::tempdir().unwrap();
    let mut config = common::desk_config(out.path());
    config.max_tokens = 64;
    let prefixes = config.validation_prefixes.clone().unwrap();
    let prepared = Prepared::load_with_prefixes(&config, &prefixes).unwrap();
    let grid = parse_grid("top-k:k=2|10|100").unwrap();
    let result = sweep_prepared(&prepared, &config, &grid, Objective::Uspg).unwrap();
    assert_eq!(result.rows.len(), 3);
    assert!(result.rows.iter().all(|r| r.objective.is_some()));
    let best = result.rows[result.best].objective.unwrap();
    for (i, r) in result.rows.iter().enumerate() {
        let v = r.objective.unwrap();
        assert!(v < best || (v == best && i >= result.best));
    }
}

#[test]
fn sweep_ties_go_to_the_first_point() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let prepared = Prepared::load(&config).unwrap();
    // Identical configurations score identically.
    let grid: Vec<StrategyConfig> = vec!["greedy".parse().unwrap(), "greedy".parse().unwrap()];
    let result = sweep_prepared(&prepared, &config, &grid, Objective::Spg).unwrap();
    assert_eq!(result.best, 0);
}

fn verdec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_verdec"))
}

fn cli_flags(config: &ExperimentConfig) -> Vec<String> {
    let p = |x: &Path| x.display().to_string();
    vec![
        "--corpus".into(),
        p(&config.corpus),
        "--prefixes".into(),
        p(&config.prefixes),
        "--kb".into(),
        p(&config.kb),
        "--order".into(),
        "4".into(),
        "--smoothing-k".into(),
        "0.01".into(),
        "--max-tokens".into(),
        "64".into(),
        "--strategy".into(),
        "top-k".into(),
        "--strategy".into(),
        "bs:beam_size=4".into(),
    ]
}

#[test]
fn cli_stages_reproduce_the_one_shot_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let flags = cli_flags(&config);
    let staged = tmp.path().join("staged");
    let whole = tmp.path().join("whole");
    let out = |d: &Path| vec!["--output-dir".to_string(), d.display().to_string()];

    let status = verdec()
        .arg("train")
        .args(&flags)
        .args(out(&staged))
        .status()
        .unwrap();
    assert!(status.success());
    let model = staged.join("model.json");
    for cmd in ["generate", "check", "evaluate"] {
        let status = verdec()
            .arg(cmd)
            .args(&flags)
            .args(["--model", model.to_str().unwrap()])
            .args(out(&staged))
            .env_remove("VERDEC_SEED")
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}");
    }
    let status = verdec()
        .arg("run")
        .args(&flags)
        .args(out(&whole))
        .env_remove("VERDEC_SEED")
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["generations.jsonl", "verdicts.jsonl", "metrics.csv"] {
        assert_eq!(read(&staged.join(name)), read(&whole.join(name)), "{name}");
    }

    let report = verdec()
        .arg("report")
        .arg(whole.join("metrics.csv"))
        .output()
        .unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("top-k"));

    let seeded = tmp.path().join("seeded");
    let status = verdec()
        .arg("generate")
        .args(&flags)
        .args(out(&seeded))
        .env("VERDEC_SEED", "99")
        .status()
        .unwrap();
    assert!(status.success());
    assert_ne!(
        read(&seeded.join("generations.jsonl")),
        read(&whole.join("generations.jsonl"))
    );
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let mut flags = cli_flags(&config);
    flags.extend([
        "--output-dir".into(),
        tmp.path().join("x").display().to_string(),
    ]);

    let missing = verdec()
        .args(["run", "--prefixes", "nowhere.jsonl"])
        .output()
        .unwrap();
    assert!(!missing.status.success());

    let partial = verdec()
        .arg("run")
        .args(&flags)
        .args(["--strategy", "top-k:k=100000"])
        .output()
        .unwrap();
    assert!(!partial.status.success());

    let sweep = verdec()
        .arg("sweep")
        .args(&flags)
        .args([
            "--validation-prefixes",
            tmp.path()
                .join("prefixes_validation.jsonl")
                .to_str()
                .unwrap(),
        ])
        .args(["--grid", "top-k:k=2|3", "--objective", "spg"])
        .output()
        .unwrap();
    assert!(
        sweep.status.success(),
        "{}",
        String::from_utf8_lossy(&sweep.stderr)
    );
    assert!(String::from_utf8_lossy(&sweep.stdout).contains("best:"));
}
