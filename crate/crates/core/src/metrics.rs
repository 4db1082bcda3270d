//! Confusion matrix and classification metrics with support-weighted
//! multiclass aggregation, rendered as text, CSV, and JSON reports.
//!
//! Weighted (not macro) averaging is used throughout because it makes the
//! aggregate recall algebraically equal to accuracy, which is the relation
//! the reporting format assumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::Label;

/// Square count matrix; rows index the true class, columns the predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<ConfusionMatrix> {
        let n = counts.len();
        if n == 0 {
            return Err(Error::Validation("confusion matrix cannot be empty".into()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "confusion matrix must be square: {n} rows but a row of length {}",
                row.len()
            )));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Tally predictions against class codes. `n_classes` bounds both inputs.
pub fn confusion_from_codes(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix> {
    if y_true.is_empty() {
        return Err(Error::Validation("no predictions to tally".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Validation(format!(
                "class code out of range: true {t}, pred {p}, n_classes {n_classes}"
            )));
        }
        counts[t][p] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Tally labeled predictions into the standard 4-class matrix.
pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    let t: Vec<usize> = y_true.iter().map(|l| l.code()).collect();
    let p: Vec<usize> = y_pred.iter().map(|l| l.code()).collect();
    confusion_from_codes(&t, &p, crate::skeleton::N_CLASSES)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Support-weighted mean of per-class precision.
    pub precision: f64,
    /// Support-weighted mean of per-class recall; equals accuracy.
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64, what: &str, class: usize) -> f64 {
    if den == 0 {
        log::warn!("{what} for class {class} is 0/0 (no samples involved); defining it as 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation(
            "confusion matrix has no samples".into(),
        ));
    }
    let n = cm.n_classes();
    let counts = cm.counts();
    let mut per_class = Vec::with_capacity(n);
    let mut trace = 0u64;
    for k in 0..n {
        let tp = counts[k][k];
        let row: u64 = counts[k].iter().sum();
        let col: u64 = counts.iter().map(|r| r[k]).sum();
        trace += tp;
        let precision = ratio(tp, col, "precision", k);
        let recall = ratio(tp, row, "recall", k);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: row,
        });
    }
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|c| c.support as f64 * f(c))
            .sum::<f64>()
            / total as f64
    };
    Ok(MetricsReport {
        accuracy: trace as f64 / total as f64,
        precision: weighted(|c| c.precision),
        recall: weighted(|c| c.recall),
        f1: weighted(|c| c.f1),
        per_class,
    })
}

/// A report table rendered in all three output encodings at once; the CSV
/// and JSON carry full-precision values, the text table rounds to 4
/// decimals for reading.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
    pub json: String,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    model: &'a str,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    per_class: &'a [ClassMetrics],
}

/// Render one row per (model name, report) pair, preserving input order.
pub fn render_report(rows: &[(String, MetricsReport)]) -> Result<RenderedReport> {
    if rows.is_empty() {
        return Err(Error::Validation("report needs at least one row".into()));
    }
    let name_w = rows
        .iter()
        .map(|(n, _)| n.len())
        .chain(std::iter::once("Model".len()))
        .max()
        .unwrap();
    let mut text = format!(
        "{:<name_w$}  {:>8}  {:>9}  {:>7}  {:>8}\n",
        "Model", "Accuracy", "Precision", "Recall", "F1-score"
    );
    let mut csv = String::from("model,accuracy,precision,recall,f1\n");
    let mut json_rows = Vec::with_capacity(rows.len());
    for (name, r) in rows {
        text += &format!(
            "{name:<name_w$}  {:>8.4}  {:>9.4}  {:>7.4}  {:>8.4}\n",
            r.accuracy, r.precision, r.recall, r.f1
        );
        csv += &format!(
            "{name},{},{},{},{}\n",
            r.accuracy, r.precision, r.recall, r.f1
        );
        json_rows.push(JsonRow {
            model: name,
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            per_class: &r.per_class,
        });
    }
    let json = serde_json::to_string_pretty(&json_rows)
        .map_err(|e| Error::Validation(format!("serialize failure: {e}")))?
        + "\n";
    Ok(RenderedReport { text, csv, json })
}
