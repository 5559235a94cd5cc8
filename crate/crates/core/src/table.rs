//! Tabular views of results, rendered as aligned text or CSV.
//!
//! [`Style::Display`] rounds for reading (percentages to two places, p-values
//! in scientific notation); [`Style::Raw`] keeps full precision for machine
//! consumption.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::classifier::Prediction;
use crate::crossval::{CvResult, FoldPlan};
use crate::data::{CategoryLabel, ValidationReport};
use crate::evaluation::{display_pct, ClassificationReport, ConfusionMatrix, MacroRow};
use crate::ranking::{FactorStats, RankingResult};
use crate::stats::PairedTestResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Display,
    Raw,
}

impl Style {
    fn pct(self, x: f64) -> String {
        match self {
            Style::Display => display_pct(x),
            Style::Raw => x.to_string(),
        }
    }

    fn num(self, x: f64, places: usize) -> String {
        match self {
            Style::Display => format!("{x:.places$}"),
            Style::Raw => x.to_string(),
        }
    }

    fn sci(self, x: f64) -> String {
        match self {
            Style::Display => format!("{x:.2E}"),
            Style::Raw => x.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 input")
    }

    /// Left-aligned text columns separated by two spaces; numbers right-aligned.
    pub fn render(&self) -> String {
        let n = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let numeric: Vec<bool> = (0..n)
            .map(|c| {
                !self.rows.is_empty()
                    && self.rows.iter().any(|r| !r[c].is_empty())
                    && self.rows.iter().all(|r| {
                        let s = r[c].trim_end_matches('%');
                        s.is_empty() || s.parse::<f64>().is_ok()
                    })
            })
            .collect();
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c > 0 {
                    s.push_str("  ");
                }
                if numeric[c] {
                    write!(s, "{cell:>w$}", w = widths[c]).unwrap();
                } else {
                    write!(s, "{cell:<w$}", w = widths[c]).unwrap();
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&self.headers, &mut out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, &mut out);
        for row in &self.rows {
            line(row, &mut out);
        }
        out
    }
}

pub fn validation_table(report: &ValidationReport) -> Table {
    let mut t = Table::new(["subject", "violation"]);
    for v in &report.violations {
        t.push(vec![v.subject.clone(), v.message.clone()]);
    }
    t
}

/// One row per (model, item), with a gold column when `gold` is given.
pub fn predictions_table(
    models: &[(&str, &[Prediction])],
    gold: Option<&BTreeMap<String, CategoryLabel>>,
    style: Style,
) -> Table {
    let mut headers = vec!["model".to_string(), "item_id".into(), "predicted".into(), "tie".into()];
    if gold.is_some() {
        headers.insert(2, "gold".into());
    }
    headers.extend(CategoryLabel::ALL.iter().map(|l| format!("score_{l}")));
    let mut t = Table::new(headers);
    for (model, preds) in models {
        for p in preds.iter() {
            let mut row = vec![model.to_string(), p.item_id.clone()];
            if let Some(g) = gold {
                row.push(g.get(&p.item_id).map(|l| l.to_string()).unwrap_or_default());
            }
            row.push(p.predicted.to_string());
            row.push(p.tie.to_string());
            row.extend(
                CategoryLabel::ALL
                    .iter()
                    .map(|l| p.scores.get(l).map(|s| style.num(*s, 6)).unwrap_or_default()),
            );
            t.push(row);
        }
    }
    t
}

pub fn confusion_table(models: &[(&str, &ConfusionMatrix)]) -> Table {
    let labels = models.first().map(|(_, cm)| cm.labels.clone()).unwrap_or_else(|| CategoryLabel::ALL.to_vec());
    let mut headers = vec!["model".to_string(), "gold".into()];
    headers.extend(labels.iter().map(|l| l.to_string()));
    let mut t = Table::new(headers);
    for (model, cm) in models {
        for (i, label) in cm.labels.iter().enumerate() {
            let mut row = vec![model.to_string(), label.to_string()];
            row.extend(cm.counts[i].iter().map(u64::to_string));
            t.push(row);
        }
    }
    t
}

/// Per-class rows followed by accuracy and macro-average rows, per model.
pub fn report_table(models: &[(&str, &ClassificationReport)], style: Style) -> Table {
    let mut t = Table::new(["model", "class", "precision", "recall", "f1", "support"]);
    for (model, r) in models {
        for m in &r.per_class {
            t.push(vec![
                model.to_string(),
                m.label.to_string(),
                style.pct(m.precision),
                style.pct(m.recall),
                style.pct(m.f1),
                m.support.to_string(),
            ]);
        }
        t.push(vec![
            model.to_string(),
            "accuracy".into(),
            String::new(),
            String::new(),
            style.pct(r.accuracy),
            r.total.to_string(),
        ]);
        t.push(vec![
            model.to_string(),
            "macro avg".into(),
            style.pct(r.macro_precision),
            style.pct(r.macro_recall),
            style.pct(r.macro_f1),
            r.total.to_string(),
        ]);
    }
    t
}

pub fn macro_table_view(rows: &[MacroRow], style: Style) -> Table {
    let mut t = Table::new(["model", "macro_precision", "macro_recall", "macro_f1"]);
    for r in rows {
        t.push(vec![
            r.model.clone(),
            style.pct(r.macro_precision),
            style.pct(r.macro_recall),
            style.pct(r.macro_f1),
        ]);
    }
    t
}

pub fn folds_table(plan: &FoldPlan) -> Table {
    let mut t = Table::new(["item_id", "fold"]);
    for a in &plan.assignments {
        t.push(vec![a.id.clone(), a.fold.to_string()]);
    }
    t
}

/// One row per model with its fold accuracies, mean and standard deviation.
pub fn cv_table(results: &[CvResult], style: Style) -> Table {
    let k = results.iter().map(|r| r.fold_accuracies.len()).max().unwrap_or(0);
    let mut headers = vec!["model".to_string()];
    headers.extend((0..k).map(|f| format!("fold_{f}")));
    headers.extend(["mean".to_string(), "std".into()]);
    let mut t = Table::new(headers);
    for r in results {
        let mut row = vec![r.model_name.clone()];
        row.extend((0..k).map(|f| r.fold_accuracies.get(f).map(|a| style.num(*a, 4)).unwrap_or_default()));
        row.push(style.num(r.mean, 4));
        row.push(style.num(r.std, 4));
        t.push(row);
    }
    t
}

/// A model-pair comparison as shown in the pairwise table.
pub struct ComparisonRow<'a> {
    pub model_a: &'a str,
    pub model_b: &'a str,
    pub result: Option<&'a PairedTestResult>,
    pub error: Option<&'a str>,
}

pub fn comparison_table(rows: &[ComparisonRow<'_>], style: Style) -> Table {
    let mut t = Table::new([
        "model_a",
        "model_b",
        "t_stat",
        "p_value",
        "cohens_d_pooled",
        "cohens_d_paired",
        "decision",
        "error",
    ]);
    for r in rows {
        let mut row = vec![r.model_a.to_string(), r.model_b.to_string()];
        match r.result {
            Some(res) => row.extend([
                style.num(res.t_stat, 5),
                style.sci(res.p_value),
                style.num(res.cohens_d_pooled, 6),
                style.num(res.cohens_d_paired, 6),
                res.decision.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        row.push(r.error.unwrap_or_default().to_string());
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorOrder {
    /// Alphabetical by factor name.
    #[default]
    Name,
    /// By final rank.
    Rank,
}

fn name_key(s: &str) -> (String, String) {
    (s.to_lowercase(), s.to_string())
}

pub fn ranking_table(ranking: &RankingResult, order: FactorOrder, style: Style) -> Table {
    let mut t = Table::new(["MSD Risk Factors", "Rank", "mode", "mode_count", "multimodal", "mean"]);
    let mut rows: Vec<_> = ranking.per_factor.iter().collect();
    match order {
        FactorOrder::Name => rows.sort_by_key(|f| name_key(&f.factor)),
        FactorOrder::Rank => rows.sort_by_key(|f| f.final_rank),
    }
    for f in rows {
        t.push(vec![
            f.factor.clone(),
            f.final_rank.to_string(),
            f.mode_value.to_string(),
            f.mode_count.to_string(),
            f.multimodal.to_string(),
            style.num(f.mean, 2),
        ]);
    }
    t
}

/// Descriptive rows; `ranking` is needed only for [`FactorOrder::Rank`].
pub fn descriptive_table(
    stats: &[FactorStats],
    order: FactorOrder,
    ranking: Option<&RankingResult>,
    style: Style,
) -> Table {
    let mut t = Table::new(["MSD Risk Factors", "mean", "std", "min", "25%", "50%", "75%", "max"]);
    let mut rows: Vec<_> = stats.iter().collect();
    match (order, ranking) {
        (FactorOrder::Rank, Some(r)) => {
            rows.sort_by_key(|s| r.get(&s.factor).map(|f| f.final_rank).unwrap_or(usize::MAX))
        }
        _ => rows.sort_by_key(|s| name_key(&s.factor)),
    }
    for s in rows {
        let d = &s.stats;
        t.push(vec![
            s.factor.clone(),
            style.num(d.mean, 2),
            style.num(d.std, 2),
            style.num(d.min, 0),
            style.num(d.q25, 2),
            style.num(d.q50, 2),
            style.num(d.q75, 2),
            style.num(d.max, 0),
        ]);
    }
    t
}
