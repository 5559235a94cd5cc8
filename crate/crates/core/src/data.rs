//! Shared domain types: category labels, labeled items, vectors and embedding sets.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the L2 norm of a vector in a set flagged as normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-6;

/// One of the five risk-factor categories.
///
/// The declaration order is the canonical label order used for tie-breaking
/// and for every tabular output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryLabel {
    Personal,
    Workplace,
    Psychosocial,
    Organizational,
    Biomechanical,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 5] = [
        CategoryLabel::Personal,
        CategoryLabel::Workplace,
        CategoryLabel::Psychosocial,
        CategoryLabel::Organizational,
        CategoryLabel::Biomechanical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryLabel::Personal => "personal",
            CategoryLabel::Workplace => "workplace",
            CategoryLabel::Psychosocial => "psychosocial",
            CategoryLabel::Organizational => "organizational",
            CategoryLabel::Biomechanical => "biomechanical",
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lowered = s.trim().to_lowercase();
        CategoryLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == lowered)
            .ok_or_else(|| Error::Param(format!("unknown label '{s}'")))
    }
}

/// A risk-factor phrase with its gold category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub id: String,
    pub text: String,
    pub gold: CategoryLabel,
}

/// The text embedded for each category. Always holds all five categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    phrases: BTreeMap<CategoryLabel, String>,
}

impl Default for LabelSet {
    fn default() -> Self {
        LabelSet {
            phrases: CategoryLabel::ALL
                .into_iter()
                .map(|c| (c, c.as_str().to_string()))
                .collect(),
        }
    }
}

impl LabelSet {
    /// Replaces the phrase for one category.
    pub fn with_phrase(mut self, label: CategoryLabel, phrase: impl Into<String>) -> Self {
        self.phrases.insert(label, phrase.into());
        self
    }

    pub fn phrase(&self, label: CategoryLabel) -> &str {
        &self.phrases[&label]
    }

    /// Labels and phrases in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (CategoryLabel, &str)> {
        self.phrases.iter().map(|(l, p)| (*l, p.as_str()))
    }

    pub fn labels(&self) -> &'static [CategoryLabel] {
        &CategoryLabel::ALL
    }
}

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Param("vector must have at least one component".into()));
        }
        if let Some(i) = components.iter().position(|x| !x.is_finite()) {
            return Err(Error::Param(format!(
                "vector component {i} is not finite ({})",
                components[i]
            )));
        }
        Ok(Vector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm, accumulated in index order.
    pub fn norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, x| acc + x * x).sqrt()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub text: String,
    pub vector: Vector,
}

/// Row-aligned item vectors produced by one embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    model_id: String,
    dim: usize,
    normalized: bool,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    /// Builds a set, checking shared dimension, id uniqueness and the
    /// normalized flag.
    pub fn new(
        model_id: impl Into<String>,
        dim: usize,
        normalized: bool,
        records: Vec<EmbeddingRecord>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("embedding dim must be positive".into()));
        }
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.vector.dim() != dim {
                return Err(Error::schema(
                    format!("record {i} ('{}')", r.id),
                    format!("vector length {} != dim {dim}", r.vector.dim()),
                ));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::schema(
                    format!("record {i}"),
                    format!("duplicate id '{}'", r.id),
                ));
            }
            if normalized && (r.vector.norm() - 1.0).abs() > NORMALIZED_TOLERANCE {
                return Err(Error::schema(
                    format!("record {i} ('{}')", r.id),
                    format!("set is flagged normalized but norm is {}", r.vector.norm()),
                ));
            }
        }
        Ok(EmbeddingSet {
            model_id: model_id.into(),
            dim,
            normalized,
            records,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn vectors(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.vector)
    }

    /// Returns a copy with every vector scaled to unit length.
    pub fn l2_normalized(&self) -> Result<Self> {
        if self.normalized {
            return Ok(self.clone());
        }
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(EmbeddingRecord {
                    id: r.id.clone(),
                    text: r.text.clone(),
                    vector: crate::metrics::l2_normalize(&r.vector).map_err(|e| e.with_item(&r.id))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddingSet::new(self.model_id.clone(), self.dim, true, records)
    }

    /// Keeps the records whose id satisfies `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        EmbeddingSet {
            model_id: self.model_id.clone(),
            dim: self.dim,
            normalized: self.normalized,
            records: self.records.iter().filter(|r| keep(&r.id)).cloned().collect(),
        }
    }

    /// Consumes the set, returning its records.
    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }
}

/// A validated dataset: every gold label is known and ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<LabeledItem>,
    labels: LabelSet,
}

impl Dataset {
    pub fn items(&self) -> &[LabeledItem] {
        &self.items
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn with_labels(mut self, labels: LabelSet) -> Self {
        self.labels = labels;
        self
    }

    pub fn item(&self, id: &str) -> Option<&LabeledItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// The 25 risk-factor phrases with their gold categories.
    pub fn reference() -> Self {
        let items = REFERENCE_FACTORS
            .iter()
            .map(|f| LabeledItem {
                id: f.id.to_string(),
                text: f.phrase.to_string(),
                gold: f.category,
            })
            .collect();
        Dataset {
            items,
            labels: LabelSet::default(),
        }
    }

    pub fn to_manifest(&self) -> DatasetManifest {
        DatasetManifest {
            labels: self
                .labels
                .iter()
                .map(|(l, p)| (l.as_str().to_string(), p.to_string()))
                .collect(),
            items: self
                .items
                .iter()
                .map(|i| ManifestItem {
                    id: i.id.clone(),
                    text: i.text.clone(),
                    gold: i.gold.as_str().to_string(),
                })
                .collect(),
        }
    }
}

/// Unvalidated dataset as it appears on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Optional label-phrase overrides keyed by category name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    pub items: Vec<ManifestItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub text: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Item id, or `labels.<key>` for label-set problems.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation in a manifest. Never fails.
pub fn validate_dataset(manifest: &DatasetManifest) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |subject: &str, message: String| {
        violations.push(Violation {
            subject: subject.to_string(),
            message,
        })
    };

    for (key, phrase) in &manifest.labels {
        if key.parse::<CategoryLabel>().is_err() {
            push(&format!("labels.{key}"), format!("unknown label '{key}'"));
        }
        if phrase.trim().is_empty() {
            push(&format!("labels.{key}"), "empty label phrase".into());
        }
    }

    let mut seen = HashSet::new();
    let mut reported_dupes = HashSet::new();
    for item in &manifest.items {
        if item.id.trim().is_empty() {
            push(&item.id, "empty id".into());
        }
        if !seen.insert(item.id.as_str()) && reported_dupes.insert(item.id.as_str()) {
            push(&item.id, format!("duplicate id '{}'", item.id));
        }
        if item.text.trim().is_empty() {
            push(&item.id, "empty text".into());
        }
        if item.gold.parse::<CategoryLabel>().is_err() {
            push(&item.id, format!("unknown label '{}'", item.gold));
        }
    }
    ValidationReport { violations }
}

impl TryFrom<DatasetManifest> for Dataset {
    type Error = Error;

    fn try_from(manifest: DatasetManifest) -> Result<Self> {
        let report = validate_dataset(&manifest);
        if let Some(first) = report.violations.first() {
            return Err(Error::schema(
                first.subject.clone(),
                format!(
                    "{} ({} violation(s) in total)",
                    first.message,
                    report.violations.len()
                ),
            ));
        }
        let mut labels = LabelSet::default();
        for (key, phrase) in manifest.labels {
            labels = labels.with_phrase(key.parse()?, phrase);
        }
        let items = manifest
            .items
            .into_iter()
            .map(|i| {
                Ok(LabeledItem {
                    gold: i.gold.parse()?,
                    id: i.id,
                    text: i.text,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { items, labels })
    }
}

/// A risk factor of the reference corpus.
#[derive(Debug, Clone, Copy)]
pub struct RiskFactor {
    pub id: &'static str,
    /// Phrase used for classification.
    pub phrase: &'static str,
    /// Column name used in ranking output.
    pub survey_name: &'static str,
    pub category: CategoryLabel,
}

macro_rules! factor {
    ($id:literal, $phrase:literal, $survey:literal, $cat:ident) => {
        RiskFactor {
            id: $id,
            phrase: $phrase,
            survey_name: $survey,
            category: CategoryLabel::$cat,
        }
    };
}

pub const REFERENCE_FACTORS: [RiskFactor; 25] = [
    factor!("age", "Age", "Age", Personal),
    factor!("gender", "Gender", "Gender", Personal),
    factor!("anthropometry", "Anthropometry", "Anthropometry", Personal),
    factor!("lifestyle", "Lifestyle", "Lifestyle", Personal),
    factor!("work_experience", "Work Experience", "Work experience", Personal),
    factor!("layout", "Layout", "Layout", Workplace),
    factor!("pace_of_work", "Pace of Work", "Pace of work", Workplace),
    factor!("noise", "Noise", "Noise", Workplace),
    factor!("inappropriate_lighting", "Inappropriate Lighting", "Inappropriate lighting", Workplace),
    factor!("environmental_condition", "Environmental Condition", "Environmental condition", Workplace),
    factor!("job_dissatisfaction", "Job dissatisfaction", "Job dissatisfaction", Psychosocial),
    factor!("social_support", "Social support", "Social support", Psychosocial),
    factor!("mental_and_occupational_stress", "Mental and occupational stress", "Mental and occupational stress", Psychosocial),
    factor!("job_insecurity", "Job insecurity", "Job insecurity", Psychosocial),
    factor!("effort_reward_imbalance", "Effort-reward imbalance", "Effort reward imbalance", Psychosocial),
    factor!("insufficient_breaks", "Insufficient breaks", "Insufficient break", Organizational),
    factor!("poor_job_design", "Poor job design", "Poor job design", Organizational),
    factor!("high_job_demand", "High job demand", "High job demand", Organizational),
    factor!("management_style", "Management style", "Management style", Organizational),
    factor!("poor_employee_facilities", "Poor employee facilities", "Poor employee facility", Organizational),
    factor!("working_posture", "Working Posture", "Working posture", Biomechanical),
    factor!("vibration", "Vibration", "Vibration", Biomechanical),
    factor!("repetitive_motion", "Repetitive Motion", "Repetitive motion", Biomechanical),
    factor!("force", "Force", "Force", Biomechanical),
    factor!("deviation_from_neutral_body_alignment", "Deviation from Neutral Body Alignment", "Deviation from neutral body alignment", Biomechanical),
];
