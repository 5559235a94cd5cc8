//! Confusion matrices, per-class precision/recall/F1 and macro averages.

use serde::{Deserialize, Serialize};

use crate::data::CategoryLabel;
use crate::error::{Error, Result};

/// Counts with rows = gold label and columns = predicted label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<CategoryLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Per-class gold counts.
    pub fn supports(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn predicted_counts(&self) -> Vec<u64> {
        (0..self.labels.len())
            .map(|j| self.counts.iter().map(|row| row[j]).sum())
            .collect()
    }
}

/// Confusion matrix over the five canonical labels.
pub fn confusion(gold: &[CategoryLabel], predicted: &[CategoryLabel]) -> Result<ConfusionMatrix> {
    confusion_with_labels(&CategoryLabel::ALL, gold, predicted)
}

/// Confusion matrix over an explicit label order.
pub fn confusion_with_labels(
    labels: &[CategoryLabel],
    gold: &[CategoryLabel],
    predicted: &[CategoryLabel],
) -> Result<ConfusionMatrix> {
    if gold.len() != predicted.len() {
        return Err(Error::Param(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Param("confusion matrix needs at least one item".into()));
    }
    let index = |l: CategoryLabel| {
        labels
            .iter()
            .position(|x| *x == l)
            .ok_or_else(|| Error::Param(format!("label '{l}' is not in the label list")))
    };
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (g, p) in gold.iter().zip(predicted) {
        counts[index(*g)?][index(*p)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: CategoryLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
}

impl ClassificationReport {
    pub fn class(&self, label: CategoryLabel) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.label == label)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// Per-class and macro metrics. Every 0/0 is reported as 0.
pub fn report(cm: &ConfusionMatrix) -> ClassificationReport {
    let predicted = cm.predicted_counts();
    let supports = cm.supports();
    let per_class: Vec<ClassMetrics> = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let tp = cm.counts[i][i];
            let precision = ratio(tp, predicted[i]);
            let recall = ratio(tp, supports[i]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: supports[i],
            }
        })
        .collect();
    ClassificationReport {
        accuracy: ratio(cm.trace(), cm.total()),
        macro_precision: mean(per_class.iter().map(|m| m.precision)),
        macro_recall: mean(per_class.iter().map(|m| m.recall)),
        macro_f1: mean(per_class.iter().map(|m| m.f1)),
        total: cm.total(),
        per_class,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub model: String,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// One macro-average row per model, in input order.
pub fn macro_table(reports: &[(String, ClassificationReport)]) -> Result<Vec<MacroRow>> {
    if reports.is_empty() {
        return Err(Error::Param("macro table needs at least one report".into()));
    }
    Ok(reports
        .iter()
        .map(|(model, r)| MacroRow {
            model: model.clone(),
            macro_precision: r.macro_precision,
            macro_recall: r.macro_recall,
            macro_f1: r.macro_f1,
        })
        .collect())
}

/// Formats a proportion as a percentage rounded to two decimal places of the
/// proportion, e.g. `0.5333 → "53.00%"`.
pub fn display_pct(x: f64) -> String {
    format!("{:.2}%", (x * 100.0).round())
}
