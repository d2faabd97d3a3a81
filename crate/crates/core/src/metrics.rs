//! Completion metrics and the evaluation dataset format.
//!
//! Code Match: exact match after whitespace trim, plus normalized edit
//! similarity. Identifier Match: exact match of the ordered identifier
//! lists plus precision/recall/F1 over the identifier multisets. Keyword
//! lists are a per-language profile; the default covers the analyzer's
//! Python subset.

use crate::error::{Error, Result};
use crate::similarity::edit_similarity;
use crate::token::extract_identifiers;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Keywords excluded from identifier extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifierProfile {
    pub keywords: BTreeSet<String>,
}

impl IdentifierProfile {
    pub fn python() -> IdentifierProfile {
        const KEYWORDS: &[&str] = &[
            "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
            "continue", "def", "del", "elif", "else", "except", "finally", "for", "from",
            "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass",
            "raise", "return", "try", "while", "with", "yield",
        ];
        IdentifierProfile {
            keywords: KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Default for IdentifierProfile {
    fn default() -> Self {
        IdentifierProfile::python()
    }
}

/// Exact match after trimming leading/trailing whitespace: 0 or 1.
pub fn code_em(pred: &str, gt: &str) -> u32 {
    u32::from(pred.trim() == gt.trim())
}

/// Edit similarity of the trimmed strings in [0, 1].
pub fn code_es(pred: &str, gt: &str) -> f64 {
    edit_similarity(pred.trim(), gt.trim())
}

/// Identifier metrics: (exact match, precision, recall, f1).
///
/// Precision and recall use multiset intersection, so repeated identifiers
/// carry their weight. Empty sides follow the degenerate rule p/r = 0; both
/// lists empty still count as an exact match.
pub fn identifier_metrics(pred: &str, gt: &str, profile: &IdentifierProfile) -> (u32, f64, f64, f64) {
    let pred_ids = extract_identifiers(pred, &profile.keywords);
    let gt_ids = extract_identifiers(gt, &profile.keywords);
    let em = u32::from(pred_ids == gt_ids);

    let counts = |ids: &[String]| -> BTreeMap<String, usize> {
        let mut map = BTreeMap::new();
        for id in ids {
            *map.entry(id.clone()).or_insert(0) += 1;
        }
        map
    };
    let pred_counts = counts(&pred_ids);
    let gt_counts = counts(&gt_ids);
    let inter: usize = pred_counts
        .iter()
        .map(|(id, &n)| n.min(gt_counts.get(id).copied().unwrap_or(0)))
        .sum();

    let precision = if pred_ids.is_empty() {
        0.0
    } else {
        inter as f64 / pred_ids.len() as f64
    };
    let recall = if gt_ids.is_empty() {
        0.0
    } else {
        inter as f64 / gt_ids.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (em, precision, recall, f1)
}

/// One benchmark task: complete `file_path` at `cursor_line` given the
/// edited prefix, judged against `groundtruth`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalExample {
    pub task_id: String,
    pub repo_root: String,
    pub file_path: String,
    pub cursor_line: u32,
    pub prefix_text: String,
    pub groundtruth: String,
}

/// Parse a JSONL dataset, one example per line.
pub fn parse_dataset(origin: &str, text: &str) -> Result<Vec<EvalExample>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let example: EvalExample = serde_json::from_str(line).map_err(|e| Error::FactsSchema {
            path: origin.to_string(),
            index: idx,
            message: e.to_string(),
        })?;
        if example.groundtruth.is_empty() {
            return Err(Error::FactsSchema {
                path: origin.to_string(),
                index: idx,
                message: "groundtruth must be nonempty".to_string(),
            });
        }
        out.push(example);
    }
    Ok(out)
}

/// Parse a JSONL completions file: {"task_id", "prediction"} per line.
pub fn parse_completions(origin: &str, text: &str) -> Result<BTreeMap<String, String>> {
    #[derive(Deserialize)]
    struct Row {
        task_id: String,
        prediction: String,
    }
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line).map_err(|e| Error::FactsSchema {
            path: origin.to_string(),
            index: idx,
            message: e.to_string(),
        })?;
        out.insert(row.task_id, row.prediction);
    }
    Ok(out)
}

/// Aggregated metrics over a dataset, means in [0, 1].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub code_em: f64,
    pub code_es: f64,
    pub id_em: f64,
    pub id_p: f64,
    pub id_r: f64,
    pub id_f1: f64,
    /// Mean analogy items selected per example.
    pub n_ac: f64,
    /// Mean rationale items selected per example.
    pub n_rc: f64,
    pub n_examples: usize,
    /// Task IDs with no supplied prediction, excluded from the means.
    pub missing: Vec<String>,
}

/// Per-example measurements folded into a report.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExampleMeasurement {
    pub code_em: u32,
    pub code_es: f64,
    pub id_em: u32,
    pub id_p: f64,
    pub id_r: f64,
    pub id_f1: f64,
    pub n_ac: usize,
    pub n_rc: usize,
}

/// Score one prediction against its groundtruth.
pub fn measure_example(
    pred: &str,
    gt: &str,
    profile: &IdentifierProfile,
    n_ac: usize,
    n_rc: usize,
) -> ExampleMeasurement {
    let (id_em, id_p, id_r, id_f1) = identifier_metrics(pred, gt, profile);
    ExampleMeasurement {
        code_em: code_em(pred, gt),
        code_es: code_es(pred, gt),
        id_em,
        id_p,
        id_r,
        id_f1,
        n_ac,
        n_rc,
    }
}

/// Average measurements into a report.
pub fn aggregate(measurements: &[ExampleMeasurement], missing: Vec<String>) -> MetricsReport {
    let n = measurements.len();
    if n == 0 {
        return MetricsReport {
            missing,
            ..MetricsReport::default()
        };
    }
    let denom = n as f64;
    let mut report = MetricsReport {
        n_examples: n,
        missing,
        ..MetricsReport::default()
    };
    for m in measurements {
        report.code_em += f64::from(m.code_em);
        report.code_es += m.code_es;
        report.id_em += f64::from(m.id_em);
        report.id_p += m.id_p;
        report.id_r += m.id_r;
        report.id_f1 += m.id_f1;
        report.n_ac += m.n_ac as f64;
        report.n_rc += m.n_rc as f64;
    }
    report.code_em /= denom;
    report.code_es /= denom;
    report.id_em /= denom;
    report.id_p /= denom;
    report.id_r /= denom;
    report.id_f1 /= denom;
    report.n_ac /= denom;
    report.n_rc /= denom;
    report
}

impl MetricsReport {
    /// Aligned plaintext table: metric columns reported ×100, context counts
    /// as plain means.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("           Code            Identifier                      No. of CTXs\n");
        out.push_str("  N        EM      ES      EM      P       R       F1      AC     RC\n");
        out.push_str(&format!(
            "  {:<8} {:<7.2} {:<7.2} {:<7.2} {:<7.2} {:<7.2} {:<7.2} {:<6.2} {:<6.2}\n",
            self.n_examples,
            self.code_em * 100.0,
            self.code_es * 100.0,
            self.id_em * 100.0,
            self.id_p * 100.0,
            self.id_r * 100.0,
            self.id_f1 * 100.0,
            self.n_ac,
            self.n_rc,
        ));
        if !self.missing.is_empty() {
            out.push_str(&format!(
                "  missing predictions ({}): {}\n",
                self.missing.len(),
                self.missing.join(", ")
            ));
        }
        out
    }
}
