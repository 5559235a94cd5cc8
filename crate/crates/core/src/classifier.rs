//! Nearest-label zero-shot classification.
//!
//! Each item is scored against every category label and assigned the label
//! with the highest similarity (cosine, Jaccard) or lowest distance (all other
//! metrics). Ties go to the first label in canonical order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{CategoryLabel, EmbeddingSet, LabelSet, Vector};
use crate::error::{Error, Result};
use crate::metrics::{Direction, MetricKind, MetricSpec};
use crate::textsim::{jaccard, tokenize};

/// Prefix that marks label records inside a combined fixture.
pub const LABEL_ID_PREFIX: &str = "label:";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClassifierSpec {
    EmbeddingMetric {
        metric: MetricKind,
        #[serde(default = "default_true")]
        normalize_inputs: bool,
    },
    TokenJaccard,
}

fn default_true() -> bool {
    true
}

impl ClassifierSpec {
    pub fn embedding(metric: MetricKind) -> Self {
        ClassifierSpec::EmbeddingMetric {
            metric,
            normalize_inputs: true,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            ClassifierSpec::EmbeddingMetric { metric, .. } => metric.direction(),
            ClassifierSpec::TokenJaccard => Direction::Similarity,
        }
    }

    /// True when prediction depends on a fitted sample (Mahalanobis only).
    pub fn is_fitted(&self) -> bool {
        matches!(self, ClassifierSpec::EmbeddingMetric { metric, .. } if metric.is_fitted())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub predicted: CategoryLabel,
    pub scores: BTreeMap<CategoryLabel, f64>,
    pub tie: bool,
}

/// What a classifier runs on.
#[derive(Debug, Clone, Copy)]
pub enum ClassifierInput<'a> {
    Embeddings {
        items: &'a EmbeddingSet,
        labels: &'a EmbeddingSet,
    },
    /// `(id, text)` pairs and the phrases used for each label.
    Texts {
        items: &'a [(String, String)],
        labels: &'a LabelSet,
    },
}

/// Picks the extreme score in canonical label order. Exact equality with the
/// winner on any other label sets the tie flag.
fn select(scores: &[(CategoryLabel, f64)], direction: Direction) -> (CategoryLabel, bool) {
    let better = |a: f64, b: f64| match direction {
        Direction::Similarity => a > b,
        Direction::Distance => a < b,
    };
    let mut best = scores[0];
    for &(label, score) in &scores[1..] {
        if better(score, best.1) {
            best = (label, score);
        }
    }
    let tie = scores
        .iter()
        .filter(|(_, s)| *s == best.1)
        .count()
        > 1;
    (best.0, tie)
}

fn predict(item_id: &str, scores: Vec<(CategoryLabel, f64)>, direction: Direction) -> Prediction {
    let (predicted, tie) = select(&scores, direction);
    Prediction {
        item_id: item_id.to_string(),
        predicted,
        scores: scores.into_iter().collect(),
        tie,
    }
}

/// Maps label records to categories. Ids may be bare category names or carry
/// the [`LABEL_ID_PREFIX`]; every category must appear exactly once.
pub fn label_vectors(labels: &EmbeddingSet) -> Result<Vec<(CategoryLabel, Vector)>> {
    let mut found: BTreeMap<CategoryLabel, Vector> = BTreeMap::new();
    for r in labels.records() {
        let name = r.id.strip_prefix(LABEL_ID_PREFIX).unwrap_or(&r.id);
        let label: CategoryLabel = name
            .parse()
            .map_err(|_| Error::schema(format!("label record '{}'", r.id), "id is not a category label"))?;
        if found.insert(label, r.vector.clone()).is_some() {
            return Err(Error::schema(
                format!("label record '{}'", r.id),
                format!("duplicate embedding for label '{label}'"),
            ));
        }
    }
    CategoryLabel::ALL
        .into_iter()
        .map(|l| {
            found
                .remove(&l)
                .map(|v| (l, v))
                .ok_or_else(|| Error::schema("label embeddings", format!("missing label '{l}'")))
        })
        .collect()
}

/// Splits a combined fixture into item records and label records.
pub fn split_labels(set: &EmbeddingSet) -> (EmbeddingSet, EmbeddingSet) {
    (
        set.filter(|id| !id.starts_with(LABEL_ID_PREFIX)),
        set.filter(|id| id.starts_with(LABEL_ID_PREFIX)),
    )
}

/// An embedding classifier whose data-dependent state has been fitted.
#[derive(Debug, Clone)]
pub struct FittedClassifier {
    metric: MetricSpec,
    labels: Vec<(CategoryLabel, Vector)>,
    normalize: bool,
}

impl FittedClassifier {
    /// Fits `metric` against `sample` (only Mahalanobis looks at it).
    pub fn fit(
        metric: MetricKind,
        normalize: bool,
        labels: &EmbeddingSet,
        sample: &EmbeddingSet,
    ) -> Result<Self> {
        if labels.dim() != sample.dim() {
            return Err(Error::Dim {
                expected: sample.dim(),
                actual: labels.dim(),
            });
        }
        let labels = if normalize { labels.l2_normalized()? } else { labels.clone() };
        let metric = if metric.is_fitted() {
            let sample = if normalize { sample.l2_normalized()? } else { sample.clone() };
            metric.fit(sample.vectors())?
        } else {
            metric.fit(std::iter::empty())?
        };
        Ok(FittedClassifier {
            metric,
            labels: label_vectors(&labels)?,
            normalize,
        })
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn predict(&self, items: &EmbeddingSet) -> Result<Vec<Prediction>> {
        let dim = self.labels[0].1.dim();
        if items.dim() != dim {
            return Err(Error::Dim {
                expected: dim,
                actual: items.dim(),
            });
        }
        let items = if self.normalize { items.l2_normalized()? } else { items.clone() };
        let direction = self.metric.direction();
        items
            .records()
            .iter()
            .map(|r| {
                let scores = self
                    .labels
                    .iter()
                    .map(|(l, v)| {
                        self.metric
                            .eval(r.vector.as_slice(), v.as_slice())
                            .map(|s| (*l, s))
                            .map_err(|e| e.with_item(&r.id))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(predict(&r.id, scores, direction))
            })
            .collect()
    }
}

/// Jaccard-scores each text against the label phrases.
pub fn classify_texts(items: &[(String, String)], labels: &LabelSet) -> Vec<Prediction> {
    let label_tokens: Vec<_> = labels.iter().map(|(l, p)| (l, tokenize(p))).collect();
    items
        .iter()
        .map(|(id, text)| {
            let tokens = tokenize(text);
            let scores = label_tokens
                .iter()
                .map(|(l, lt)| (*l, jaccard(&tokens, lt)))
                .collect();
            predict(id, scores, Direction::Similarity)
        })
        .collect()
}

/// Classifies every item. For fitted metrics the covariance is estimated
/// from the (normalized) items being classified.
pub fn classify_all(input: ClassifierInput<'_>, spec: &ClassifierSpec) -> Result<Vec<Prediction>> {
    match (input, spec) {
        (
            ClassifierInput::Embeddings { items, labels },
            ClassifierSpec::EmbeddingMetric {
                metric,
                normalize_inputs,
            },
        ) => FittedClassifier::fit(*metric, *normalize_inputs, labels, items)?.predict(items),
        (ClassifierInput::Texts { items, labels }, ClassifierSpec::TokenJaccard) => {
            Ok(classify_texts(items, labels))
        }
        (ClassifierInput::Texts { .. }, _) => Err(Error::Param(
            "embedding classifiers need embedding inputs".into(),
        )),
        (ClassifierInput::Embeddings { .. }, ClassifierSpec::TokenJaccard) => Err(Error::Param(
            "the token classifier needs raw texts".into(),
        )),
    }
}
