use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use verdec::decode::{GenerationRecord, StrategyConfig};
use verdec::factcheck::{KnowledgeBase, OracleChecker};
use verdec::harness::{
    self, check_records, generate_records, human_fourgrams, load_prefixes, read_report,
    render_table, strategy_rows, write_report, Diagnostic, ExperimentConfig, RowInputs, VerdictRow,
    HUMAN,
};
use verdec::lm::{NGramLm, SmoothingConfig};
use verdec::{jsonl, Error, Result};

/// Generate continuations with several decoding strategies, fact-check them
/// and score verifiability and repetitiveness.
#[derive(Parser)]
#[command(name = "verdec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram model on the corpus and save it.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Model file to write; defaults to <output-dir>/model.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode every (strategy, prefix, seed) cell into generations.jsonl.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Fact-check generations into sentences.jsonl and verdicts.jsonl.
    Check {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Defaults to <output-dir>/generations.jsonl.
        #[arg(long)]
        generations: Option<PathBuf>,
    },
    /// Aggregate generations and verdicts into metrics.csv.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Generate, check and evaluate in one go.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Grid search over strategy parameters on the validation prefixes.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Grid such as `top-k:k=2|10|100` or `delayed-bs:delay=1|2|4|8|16`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "uspg")]
        objective: harness::Objective,
    },
    /// Print a metrics table written by `evaluate`, `run` or `sweep`.
    Report {
        /// Metrics CSV to render.
        path: PathBuf,
    },
}

/// Flags mirroring the experiment config. Flags override values from `--config`.
#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment config; relative paths resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    prefixes: Option<PathBuf>,
    #[arg(long)]
    validation_prefixes: Option<PathBuf>,
    /// Directory holding facts.jsonl and documents.jsonl.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Saved model to load instead of training on the corpus.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    /// Add-k smoothing constant.
    #[arg(long)]
    smoothing_k: Option<f64>,
    /// Strategy such as `bs:beam_size=15,n=20`; repeat for several.
    #[arg(long = "strategy")]
    strategies: Vec<StrategyConfig>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Sentences evaluated per generation.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    top_docs: Option<usize>,
    #[arg(long, env = "VERDEC_SEED")]
    global_seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new("", "", "", "verdec-out"),
        };
        set(&mut c.corpus, &self.corpus);
        set(&mut c.prefixes, &self.prefixes);
        set(&mut c.kb, &self.kb);
        set(&mut c.output_dir, &self.output_dir);
        if self.validation_prefixes.is_some() {
            c.validation_prefixes.clone_from(&self.validation_prefixes);
        }
        if self.model.is_some() {
            c.model.path.clone_from(&self.model);
        }
        set(&mut c.model.order, &self.order);
        if let Some(k) = self.smoothing_k {
            c.model.smoothing = SmoothingConfig::AddK { k };
        }
        if !self.strategies.is_empty() {
            c.strategies.clone_from(&self.strategies);
        }
        set(&mut c.seeds, &self.seeds);
        set(&mut c.k, &self.k);
        set(&mut c.max_tokens, &self.max_tokens);
        set(&mut c.checker.tau, &self.tau);
        set(&mut c.checker.top_docs, &self.top_docs);
        set(&mut c.global_seed, &self.global_seed);
        set(&mut c.workers, &self.workers);
        c.validate()?;
        Ok(c)
    }
}

fn set<T: Clone>(field: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *field = v.clone();
    }
}

fn require(path: &Path, flag: &str) -> Result<()> {
    if path.as_os_str().is_empty() {
        Err(Error::Config(format!("--{flag} is required")))
    } else {
        Ok(())
    }
}

fn require_inputs(c: &ExperimentConfig) -> Result<()> {
    if c.model.path.is_none() {
        require(&c.corpus, "corpus")?;
    }
    require(&c.prefixes, "prefixes")?;
    require(&c.kb, "kb")
}

fn load_model(c: &ExperimentConfig) -> Result<NGramLm> {
    match &c.model.path {
        Some(path) => NGramLm::load(path),
        None => {
            require(&c.corpus, "corpus")?;
            harness::train_from_file(&c.corpus, c.model.order, c.model.smoothing.clone())
        }
    }
}

fn load_checker(c: &ExperimentConfig) -> Result<OracleChecker> {
    require(&c.kb, "kb")?;
    OracleChecker::new(
        KnowledgeBase::load(c.facts_path(), c.documents_path())?,
        c.checker,
    )
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if path.exists() {
        jsonl::read(path)
    } else {
        Ok(Vec::new())
    }
}

fn report_diagnostics(diagnostics: &[Diagnostic]) -> bool {
    for d in diagnostics {
        eprintln!(
            "failed cell {} / {} / {}: {}",
            d.strategy, d.prefix_id, d.replicate, d.message
        );
    }
    diagnostics.is_empty()
}

/// Runs a command; `Ok(false)` means some cells failed.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Train { cfg, out } => {
            let c = cfg.resolve()?;
            require(&c.corpus, "corpus")?;
            let model =
                harness::train_from_file(&c.corpus, c.model.order, c.model.smoothing.clone())?;
            let out = out.unwrap_or_else(|| c.output_dir.join("model.json"));
            if let Some(dir) = out.parent() {
                create_dir(dir)?;
            }
            model.save(&out)?;
            println!(
                "order-{} model over {} tokens written to {}",
                model.order(),
                model.vocabulary().len(),
                out.display()
            );
            Ok(true)
        }
        Command::Generate { cfg } => {
            let c = cfg.resolve()?;
            require(&c.prefixes, "prefixes")?;
            let model = load_model(&c)?;
            let prefixes = load_prefixes(&c.prefixes)?;
            let (records, diagnostics) =
                generate_records(&model, &prefixes, &c.effective_strategies(), &c)?;
            create_dir(&c.output_dir)?;
            jsonl::write(c.output_dir.join("generations.jsonl"), &records)?;
            jsonl::write(c.output_dir.join("diagnostics.jsonl"), &diagnostics)?;
            println!(
                "{} generations written to {}",
                records.len(),
                c.output_dir.display()
            );
            Ok(report_diagnostics(&diagnostics))
        }
        Command::Check { cfg, generations } => {
            let c = cfg.resolve()?;
            require(&c.prefixes, "prefixes")?;
            let checker = load_checker(&c)?;
            let prefixes = load_prefixes(&c.prefixes)?;
            let path = generations.unwrap_or_else(|| c.output_dir.join("generations.jsonl"));
            let records: Vec<GenerationRecord> = jsonl::read(&path)?;
            let checked = check_records(&checker, &prefixes, &records, c.k, c.workers)?;
            create_dir(&c.output_dir)?;
            jsonl::write(c.output_dir.join("sentences.jsonl"), &checked.sentences)?;
            jsonl::write(c.output_dir.join("verdicts.jsonl"), &checked.verdicts)?;
            jsonl::write(
                c.output_dir.join("check_diagnostics.jsonl"),
                &checked.diagnostics,
            )?;
            println!(
                "{} verdicts written to {}",
                checked.verdicts.len(),
                c.output_dir.display()
            );
            Ok(report_diagnostics(&checked.diagnostics))
        }
        Command::Evaluate { cfg } => {
            let c = cfg.resolve()?;
            let dir = &c.output_dir;
            let generations: Vec<GenerationRecord> = jsonl::read(dir.join("generations.jsonl"))?;
            let verdicts: Vec<VerdictRow> = jsonl::read(dir.join("verdicts.jsonl"))?;
            let mut diagnostics: Vec<Diagnostic> = read_optional(&dir.join("diagnostics.jsonl"))?;
            diagnostics.extend(read_optional::<Diagnostic>(
                &dir.join("check_diagnostics.jsonl"),
            )?);
            let failed: std::collections::BTreeSet<(&str, &str, usize)> = diagnostics
                .iter()
                .map(|d| (d.strategy.as_str(), d.prefix_id.as_str(), d.replicate))
                .collect();
            let generations: Vec<GenerationRecord> = generations
                .iter()
                .filter(|g| {
                    !failed.contains(&(g.strategy.as_str(), g.prefix_id.as_str(), g.replicate))
                })
                .cloned()
                .collect();
            let mut named: Vec<(String, Option<StrategyConfig>)> = Vec::new();
            for g in &generations {
                if !named.iter().any(|(n, _)| n == &g.strategy) {
                    named.push((g.strategy.clone(), Some(g.params.clone())));
                }
            }
            for d in &diagnostics {
                if !named.iter().any(|(n, _)| n == &d.strategy) {
                    named.push((d.strategy.clone(), None));
                }
            }
            let with_kb = !c.kb.as_os_str().is_empty() && !c.prefixes.as_os_str().is_empty();
            let (checker, prefixes) = if with_kb {
                (Some(load_checker(&c)?), load_prefixes(&c.prefixes)?)
            } else {
                (None, Vec::new())
            };
            let human = match &checker {
                Some(ch) => human_fourgrams(&ch.kb, &prefixes, c.max_tokens),
                None => Default::default(),
            };
            let mut rows = strategy_rows(
                &named,
                RowInputs {
                    generations: &generations,
                    verdicts: &verdicts,
                    diagnostics: &diagnostics,
                    prefixes: &prefixes,
                    kb: checker.as_ref().map(|ch| &ch.kb),
                    human_4grams: &human,
                    k: c.k,
                },
            )?;
            if let Some(ch) = &checker {
                let cells: Vec<_> = prefixes
                    .iter()
                    .filter_map(|p| harness::reference_summary(ch, p, c.max_tokens, c.k))
                    .collect();
                if !cells.is_empty() {
                    rows.push(harness::ReportRow {
                        name: HUMAN.into(),
                        config: None,
                        report: Some(harness::aggregate(&cells, &human, c.k)?),
                        failed_cells: 0,
                    });
                }
            }
            write_report(&rows, &dir.join("metrics.csv"))?;
            print!("{}", render_table(&rows));
            Ok(report_diagnostics(&diagnostics))
        }
        Command::Run { cfg } => {
            let c = cfg.resolve()?;
            require_inputs(&c)?;
            let result = harness::run_experiment(&c)?;
            print!("{}", render_table(&result.rows));
            Ok(report_diagnostics(&result.diagnostics))
        }
        Command::Sweep {
            cfg,
            grid,
            objective,
        } => {
            let c = cfg.resolve()?;
            require_inputs(&c)?;
            let result = harness::sweep(&c, &harness::parse_grid(&grid)?, objective)?;
            print!("{}", result.render());
            Ok(report_diagnostics(&result.diagnostics)
                && result.rows.iter().all(|r| r.failed_cells == 0))
        }
        Command::Report { path } => {
            print!("{}", render_table(&read_report(&path)?));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
