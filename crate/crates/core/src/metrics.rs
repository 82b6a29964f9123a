//! Verifiability and repetitiveness metrics.
//!
//! For a prefix p with generated sentences G^p (the first k), V^p are the
//! sentences labeled Supported or Refuted and S^p the Supported ones. The
//! unique variants keep only the first of any run of sentences sharing the
//! same label and the same evidence set.
//!
//! - SPG  = mean_p |S^p| / k
//! - SPV  = mean_p |S^p| / |V^p|      (prefixes with |V^p| = 0 skipped)
//! - USPG = mean_p |S_u^p| / k
//! - USPV = mean_p |S_u^p| / |V_u^p|  (prefixes with |V_u^p| = 0 skipped)

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::factcheck::{Label, Verdict};
use crate::{Error, Result};

/// Verdicts for the first k sentences of one generation, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixVerdicts {
    pub prefix_id: String,
    pub verdicts: Vec<Verdict>,
}

/// Keeps the first verdict of each (label, evidence) class; NotEnoughInfo passes through.
pub fn dedupe_verdicts(verdicts: &[Verdict]) -> Vec<Verdict> {
    let mut seen = HashSet::new();
    verdicts
        .iter()
        .filter(|v| !v.label.is_verified() || seen.insert((v.label, &v.evidence)))
        .cloned()
        .collect()
}

/// One row of the results table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean distinct 4-grams per generation.
    pub distinct_4grams: f64,
    /// Mean machine/human distinct-4-gram ratio, as a fraction.
    pub fourgram_proportion: f64,
    pub spg: f64,
    pub spv: f64,
    pub uspg: f64,
    pub uspv: f64,
    /// Total unique supported sentences, averaged over seed replicates.
    pub unique_supported: f64,
    /// Prefixes excluded from SPV because nothing was verified.
    pub spv_skipped: usize,
    /// Prefixes excluded from USPV because nothing was verified.
    pub uspv_skipped: usize,
    /// Pairs excluded from the 4-gram proportion because the human count was zero.
    pub fourgram_skipped: usize,
    /// Mean tf-idf similarity of each generation to its reference document.
    pub tfidf_relevance: f64,
}

struct Counts {
    supported: usize,
    verified: usize,
}

fn counts<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Counts {
    let mut c = Counts {
        supported: 0,
        verified: 0,
    };
    for v in verdicts {
        if v.label.is_verified() {
            c.verified += 1;
        }
        if v.label == Label::Supported {
            c.supported += 1;
        }
    }
    c
}

/// Fills the four verifiability fields (and `unique_supported`, as a plain total).
pub fn compute_metrics(all: &[PrefixVerdicts], k: usize) -> Result<MetricReport> {
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if all.is_empty() {
        return Err(Error::Config("no prefixes to evaluate".into()));
    }
    if let Some(p) = all.iter().find(|p| p.verdicts.len() > k) {
        return Err(Error::Input(format!(
            "prefix {:?} has {} verdicts, more than k={k}",
            p.prefix_id,
            p.verdicts.len()
        )));
    }
    let mut report = MetricReport::default();
    let (mut spv_sum, mut spv_n, mut uspv_sum, mut uspv_n) = (0.0, 0usize, 0.0, 0usize);
    let mut spg_sum = 0.0;
    let mut uspg_sum = 0.0;
    let mut unique_supported = 0usize;
    for p in all {
        let base = counts(&p.verdicts);
        let unique = counts(&dedupe_verdicts(&p.verdicts));
        spg_sum += base.supported as f64 / k as f64;
        uspg_sum += unique.supported as f64 / k as f64;
        unique_supported += unique.supported;
        if base.verified > 0 {
            spv_sum += base.supported as f64 / base.verified as f64;
            spv_n += 1;
        } else {
            report.spv_skipped += 1;
        }
        if unique.verified > 0 {
            uspv_sum += unique.supported as f64 / unique.verified as f64;
            uspv_n += 1;
        } else {
            report.uspv_skipped += 1;
        }
    }
    let n = all.len() as f64;
    report.spg = spg_sum / n;
    report.uspg = uspg_sum / n;
    report.spv = if spv_n > 0 {
        spv_sum / spv_n as f64
    } else {
        0.0
    };
    report.uspv = if uspv_n > 0 {
        uspv_sum / uspv_n as f64
    } else {
        0.0
    };
    report.unique_supported = unique_supported as f64;
    Ok(report)
}

/// Mean machine/human ratio over aligned pairs, skipping zero human counts.
///
/// Returns the ratio as a fraction and the number of skipped pairs.
pub fn fourgram_proportion(machine: &[f64], human: &[f64]) -> Result<(f64, usize)> {
    if machine.is_empty() || machine.len() != human.len() {
        return Err(Error::Input(format!(
            "4-gram counts must be aligned and nonempty ({} vs {})",
            machine.len(),
            human.len()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (&m, &h) in machine.iter().zip(human) {
        if h > 0.0 {
            sum += m / h;
            used += 1;
        }
    }
    let skipped = machine.len() - used;
    Ok((if used > 0 { sum / used as f64 } else { 0.0 }, skipped))
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input(format!(
            "pearson needs equal lengths >= 2 ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}
