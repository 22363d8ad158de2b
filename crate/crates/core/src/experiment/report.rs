//! Experiment reports: metrics, JSON/CSV/text rendering.
//!
//! Reports are deterministic under a fixed config and seed except for the
//! wall-clock `timing` blocks, which [`ExperimentReport::to_json_without_timing`]
//! strips so byte-level comparison of two runs is meaningful.

use super::{ClassifierKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::lfp::TaskLabel;
use serde::{Deserialize, Serialize};

/// Uniform-guess and majority-class baselines, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanceRate {
    /// 100 / number of distinct classes.
    pub uniform_pct: f64,
    /// Frequency of the most common label.
    pub majority_pct: f64,
}

impl ChanceRate {
    /// The stricter of the two baselines (what a plot should draw).
    pub fn threshold_pct(&self) -> f64 {
        self.uniform_pct.max(self.majority_pct)
    }
}

/// Both chance baselines for a label set.
pub fn chance_rate(labels: &[TaskLabel]) -> ChanceRate {
    if labels.is_empty() {
        return ChanceRate {
            uniform_pct: 0.0,
            majority_pct: 0.0,
        };
    }
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let majority = counts.values().copied().max().unwrap_or(0);
    ChanceRate {
        uniform_pct: 100.0 / counts.len() as f64,
        majority_pct: 100.0 * majority as f64 / labels.len() as f64,
    }
}

/// Row-normalized confusion matrix (each row sums to 100 unless that class
/// never occurs in `truths`; such rows are all-zero and their indices are
/// returned alongside).
pub fn confusion_matrix(
    predictions: &[TaskLabel],
    truths: &[TaskLabel],
    classes: &[TaskLabel],
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    let index_of = |l: TaskLabel| -> Result<usize> {
        classes.iter().position(|&c| c == l).ok_or_else(|| {
            Error::InvalidParams(format!("label {l} not in the declared class order"))
        })
    };
    let k = classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in predictions.iter().zip(truths) {
        counts[index_of(t)?][index_of(p)?] += 1;
    }
    let mut matrix = vec![vec![0.0; k]; k];
    let mut zero_rows = Vec::new();
    for r in 0..k {
        let total: usize = counts[r].iter().sum();
        if total == 0 {
            zero_rows.push(r);
            continue;
        }
        for c in 0..k {
            matrix[r][c] = 100.0 * counts[r][c] as f64 / total as f64;
        }
    }
    Ok((matrix, zero_rows))
}

/// Wall-clock costs of one (classifier, rate) cell, summed over folds.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CellTiming {
    pub train_s: f64,
    pub test_s: f64,
}

/// Rate-dependent preparation costs (decimation/flattening and the raw
/// feature Gram), accumulated over windows and views.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RatePrep {
    pub rate_hz: f64,
    pub features_s: f64,
    pub gram_s: f64,
}

/// All wall-clock figures of a run. Absolute values depend on the machine;
/// only relative orderings (e.g. low rates cheaper than high rates, MKL
/// training slower than a single SVM) are meaningful.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportTiming {
    pub total_wall_s: f64,
    /// Wavelet transform cost over all windows and hemispheres.
    pub cwt_s: f64,
    pub rates: Vec<RatePrep>,
}

/// Results of one (classifier, rate) cell of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportCell {
    pub classifier: ClassifierKind,
    pub rate_hz: f64,
    /// Mean of the per-fold accuracies.
    pub mean_accuracy_pct: f64,
    pub fold_accuracies_pct: Vec<f64>,
    /// Row-normalized confusion over all folds' test predictions.
    pub confusion: Vec<Vec<f64>>,
    /// Rows of `confusion` with no true samples (all-zero rows).
    pub zero_truth_rows: Vec<usize>,
    /// Smallest PCA retained-variance fraction over folds and views.
    pub min_retained_variance: f64,
    pub timing: CellTiming,
}

/// Full experiment output; serializable, reproducible modulo `timing`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Echo of the configuration that produced this report.
    pub config: ExperimentConfig,
    pub class_order: Vec<TaskLabel>,
    pub chance: ChanceRate,
    pub cells: Vec<ReportCell>,
    pub timing: ReportTiming,
}

impl ExperimentReport {
    pub fn cell(&self, classifier: ClassifierKind, rate_hz: f64) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.classifier == classifier && c.rate_hz == rate_hz)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with every wall-clock field removed; two runs with the same
    /// config and seed produce byte-identical output here.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        strip_timing(&mut value);
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// Accuracy-vs-rate CSV, one line per (classifier, rate).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("classifier,rate_hz,mean_accuracy_pct,min_fold_pct,max_fold_pct\n");
        for cell in &self.cells {
            let min = cell
                .fold_accuracies_pct
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            let max = cell
                .fold_accuracies_pct
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4}\n",
                cell.classifier.name(),
                cell.rate_hz,
                cell.mean_accuracy_pct,
                min,
                max
            ));
        }
        out
    }

    /// Human-readable summary table plus per-cell confusion matrices.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "classes: {}\nchance: uniform {:.2}%, majority {:.2}%\n\n",
            self.class_order
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join(", "),
            self.chance.uniform_pct,
            self.chance.majority_pct
        ));
        out.push_str(&format!(
            "{:<12} {:>9} {:>10} {:>10} {:>10}\n",
            "classifier", "rate_hz", "mean_acc%", "min_fold%", "max_fold%"
        ));
        for cell in &self.cells {
            let min = cell
                .fold_accuracies_pct
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            let max = cell
                .fold_accuracies_pct
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            out.push_str(&format!(
                "{:<12} {:>9} {:>10.2} {:>10.2} {:>10.2}\n",
                cell.classifier.name(),
                cell.rate_hz,
                cell.mean_accuracy_pct,
                min,
                max
            ));
        }
        for cell in &self.cells {
            out.push_str(&format!(
                "\nconfusion — {} @ {} Hz (rows = truth, % of row):\n",
                cell.classifier.name(),
                cell.rate_hz
            ));
            out.push_str(&format!("{:<14}", ""));
            for c in &self.class_order {
                out.push_str(&format!("{:>14}", c.name()));
            }
            out.push('\n');
            for (r, row) in cell.confusion.iter().enumerate() {
                out.push_str(&format!("{:<14}", self.class_order[r].name()));
                for v in row {
                    out.push_str(&format!("{:>14.2}", v));
                }
                if cell.zero_truth_rows.contains(&r) {
                    out.push_str("  (no samples)");
                }
                out.push('\n');
            }
        }
        out
    }
}

fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("timing");
            map.remove("total_wall_s");
            for v in map.values_mut() {
                strip_timing(v);
            }
        }
        serde_json::Value::Array(items) => {
            for v in items {
                strip_timing(v);
            }
        }
        _ => {}
    }
}
