use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{run_strategies, Diagnostic, Prepared};
use super::report::{render_table, write_report, ReportRow};
use crate::decode::StrategyConfig;
use crate::metrics::MetricReport;
use crate::{jsonl, Error, Result};

/// Quantity a sweep maximizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Uspg,
    Uspv,
    Spg,
    Spv,
    UniqueSupported,
    Distinct4grams,
}

impl Objective {
    pub fn value(self, r: &MetricReport) -> f64 {
        match self {
            Objective::Uspg => r.uspg,
            Objective::Uspv => r.uspv,
            Objective::Spg => r.spg,
            Objective::Spv => r.spv,
            Objective::UniqueSupported => r.unique_supported,
            Objective::Distinct4grams => r.distinct_4grams,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Objective::Uspg => "uspg",
            Objective::Uspv => "uspv",
            Objective::Spg => "spg",
            Objective::Spv => "spv",
            Objective::UniqueSupported => "unique_supported",
            Objective::Distinct4grams => "distinct_4grams",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::Config(format!("unknown objective {s:?}")))
    }
}

/// Expands `name:key=a|b,key2=c|d` into the Cartesian product of the
/// alternatives, varying the last key fastest.
pub fn parse_grid(spec: &str) -> Result<Vec<StrategyConfig>> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n.trim(), p),
        None => (spec.trim(), ""),
    };
    let mut combos = vec![Vec::<String>::new()];
    for kv in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, values) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=values, got {kv:?}")))?;
        let values: Vec<&str> = values.split('|').map(str::trim).collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(Error::Config(format!("empty value in {kv:?}")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(format!("{}={v}", key.trim()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|c| {
            if c.is_empty() {
                name.parse()
            } else {
                format!("{name}:{}", c.join(",")).parse()
            }
        })
        .collect()
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: StrategyConfig,
    pub report: Option<MetricReport>,
    /// `None` when every cell of this point failed.
    pub objective: Option<f64>,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub objective: Objective,
    pub rows: Vec<SweepRow>,
    /// Index of the best row; ties go to the earliest grid point.
    pub best: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl SweepResult {
    pub fn best_config(&self) -> &StrategyConfig {
        &self.rows[self.best].config
    }

    fn report_rows(&self) -> Vec<ReportRow> {
        self.rows
            .iter()
            .map(|r| ReportRow {
                name: r.config.to_string(),
                config: Some(r.config.clone()),
                report: r.report.clone(),
                failed_cells: r.failed_cells,
            })
            .collect()
    }

    /// Plain-text table with the objective and the winner marked.
    pub fn render(&self) -> String {
        let mut out = render_table(&self.report_rows());
        out.push_str(&format!(
            "\nobjective: {}\nbest: {}\n",
            self.objective,
            self.best_config()
        ));
        out
    }

    /// Writes `sweep.csv`, `sweep.txt` and `sweep_diagnostics.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_report(&self.report_rows(), &dir.join("sweep.csv"))?;
        std::fs::write(dir.join("sweep.txt"), self.render()).map_err(|e| Error::io(dir, e))?;
        jsonl::write(dir.join("sweep_diagnostics.jsonl"), &self.diagnostics)
    }
}

/// Evaluates every grid point on the prepared prefixes and picks the
/// maximum of `objective`. Failed cells are excluded; a point with no
/// successful cell cannot win.
pub fn sweep_prepared(
    prepared: &Prepared,
    config: &ExperimentConfig,
    grid: &[StrategyConfig],
    objective: Objective,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let grid: Vec<StrategyConfig> = grid
        .iter()
        .map(|g| g.clone().with_max_tokens(config.max_tokens))
        .collect();
    let result = run_strategies(prepared, config, &grid)?;
    let rows: Vec<SweepRow> = grid
        .iter()
        .zip(&result.rows)
        .map(|(cfg, row)| SweepRow {
            config: cfg.clone(),
            objective: row.report.as_ref().map(|r| objective.value(r)),
            report: row.report.clone(),
            failed_cells: row.failed_cells,
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Some(v) = r.objective {
            if best.is_none_or(|b| v > rows[b].objective.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(i);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Input("every grid point failed".into()))?;
    Ok(SweepResult {
        objective,
        rows,
        best,
        diagnostics: result.diagnostics,
    })
}

/// Sweeps on the validation prefixes (falling back to the test prefixes)
/// and writes the table into `config.output_dir`.
pub fn sweep(
    config: &ExperimentConfig,
    grid: &[StrategyConfig],
    objective: Objective,
) -> Result<SweepResult> {
    let prefixes = config
        .validation_prefixes
        .as_ref()
        .unwrap_or(&config.prefixes);
    let prepared = Prepared::load_with_prefixes(config, prefixes)?;
    let result = sweep_prepared(&prepared, config, grid, objective)?;
    result.write(&config.output_dir)?;
    Ok(result)
}
