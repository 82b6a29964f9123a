use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decode::StrategyConfig;
use crate::metrics::{percent, MetricReport};
use crate::{Error, Result};

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub config: Option<StrategyConfig>,
    /// `None` when every cell of the strategy failed.
    pub report: Option<MetricReport>,
    pub failed_cells: usize,
}

/// Column headers, in results-table order.
pub const COLUMNS: [&str; 13] = [
    "strategy",
    "distinct_4grams",
    "fourgram_proportion",
    "spg",
    "spv",
    "uspg",
    "uspv",
    "unique_supported",
    "tfidf_relevance",
    "spv_skipped",
    "uspv_skipped",
    "fourgram_skipped",
    "failed_cells",
];

const TEXT_HEADERS: [&str; 13] = [
    "Strategy",
    "Distinct4",
    "4-gram %",
    "SPG",
    "SPV",
    "USPG",
    "USPV",
    "#USup",
    "Relevance",
    "SPV skip",
    "USPV skip",
    "4g skip",
    "Failed",
];

fn cells(row: &ReportRow) -> Vec<String> {
    let mut out = vec![row.name.clone()];
    match &row.report {
        Some(r) => out.extend([
            format!("{:.2}", r.distinct_4grams),
            percent(r.fourgram_proportion),
            percent(r.spg),
            percent(r.spv),
            percent(r.uspg),
            percent(r.uspv),
            format!("{:.2}", r.unique_supported),
            format!("{:.4}", r.tfidf_relevance),
            r.spv_skipped.to_string(),
            r.uspv_skipped.to_string(),
            r.fourgram_skipped.to_string(),
        ]),
        None => out.extend(std::iter::repeat_n(String::new(), 11)),
    }
    out.push(row.failed_cells.to_string());
    out
}

/// Renders an aligned plain-text table.
pub fn render_table(rows: &[ReportRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(cells).collect();
    let mut widths: Vec<usize> = TEXT_HEADERS.iter().map(|h| h.len()).collect();
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        for (i, (c, w)) in row.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &TEXT_HEADERS.map(String::from));
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in &body {
        line(&mut out, r);
    }
    out
}

/// Writes `path` as CSV and a text table next to it with a `.txt` extension.
pub fn write_report(rows: &[ReportRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Input("no report rows to write".into()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let txt = path.with_extension("txt");
    std::fs::write(&txt, render_table(rows)).map_err(|e| Error::io(&txt, e))
}

/// Reads a metrics CSV written by [`write_report`]; values keep the
/// written precision.
pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        return Err(Error::Input(format!(
            "{}: unexpected metrics header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: format!("bad {what}"),
        };
        let real = |j: usize| record[j].parse::<f64>().map_err(|_| bad(COLUMNS[j]));
        let int = |j: usize| record[j].parse::<usize>().map_err(|_| bad(COLUMNS[j]));
        let report = if record[1].is_empty() {
            None
        } else {
            Some(MetricReport {
                distinct_4grams: real(1)?,
                fourgram_proportion: real(2)? / 100.0,
                spg: real(3)? / 100.0,
                spv: real(4)? / 100.0,
                uspg: real(5)? / 100.0,
                uspv: real(6)? / 100.0,
                unique_supported: real(7)?,
                tfidf_relevance: real(8)?,
                spv_skipped: int(9)?,
                uspv_skipped: int(10)?,
                fourgram_skipped: int(11)?,
            })
        };
        rows.push(ReportRow {
            name: record[0].to_string(),
            config: None,
            report,
            failed_cells: int(12)?,
        });
    }
    Ok(rows)
}

/// Correlation of one sentence feature with a label indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub feature: String,
    /// `supported` or `verified`.
    pub target: String,
    pub samples: usize,
    /// `None` when undefined (too few samples or zero variance).
    pub pearson: Option<f64>,
}

pub fn write_correlations(rows: &[CorrelationRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "target", "samples", "pearson"])?;
    for r in rows {
        w.write_record([
            r.feature.clone(),
            r.target.clone(),
            r.samples.to_string(),
            r.pearson.map_or(String::new(), |p| format!("{p:.6}")),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, proportion: f64) -> ReportRow {
        ReportRow {
            name: name.into(),
            config: None,
            report: Some(MetricReport {
                distinct_4grams: 143.52,
                fourgram_proportion: proportion,
                spg: 0.3,
                spv: 0.625,
                uspg: 0.2,
                uspv: 0.5,
                unique_supported: 12.0,
                ..MetricReport::default()
            }),
            failed_cells: 0,
        }
    }

    #[test]
    fn one_row_is_header_plus_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_report(&[row("top-k", 0.6451)], &p).unwrap();
        let csv = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(
            lines[0].starts_with("strategy,distinct_4grams,fourgram_proportion,spg,spv,uspg,uspv")
        );
        assert!(lines[1].starts_with("top-k,143.52,64.51,30.00,62.50,20.00,50.00"));
        assert!(dir.path().join("m.txt").exists());
    }

    #[test]
    fn human_row_and_rerender_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let rows = vec![row("BS", 0.5), row("human", 1.0)];
        write_report(&rows, &p).unwrap();
        let first = std::fs::read(&p).unwrap();
        assert!(String::from_utf8_lossy(&first).contains("human,143.52,100.00"));
        let back = read_report(&p).unwrap();
        write_report(&back, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
        write_report(&rows, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
    }

    #[test]
    fn empty_and_unwritable() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_report(&[], &dir.path().join("m.csv")).is_err());
        let file = dir.path().join("f");
        std::fs::write(&file, "").unwrap();
        assert!(write_report(&[row("x", 1.0)], &file.join("m.csv")).is_err());
    }
}
