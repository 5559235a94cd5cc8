//! End-to-end experiment: classify with every configured model, evaluate,
//! cross-validate, compare all model pairs and rank the survey.
//!
//! A run is described by an [`ExperimentConfig`] (TOML) and produces an
//! [`ExperimentBundle`] that [`write_bundle`] lays out as one directory with
//! one file per table plus `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{classify_all, split_labels, ClassifierInput, ClassifierSpec, Prediction};
use crate::covariance::CovarianceMethod;
use crate::crossval::{make_folds, run_cv, CvResult};
use crate::data::{CategoryLabel, Dataset, DatasetManifest, EmbeddingSet, LabelSet};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, macro_table, report, ClassificationReport, ConfusionMatrix, MacroRow};
use crate::io::{read_fixture, read_survey, SurveyOptions};
use crate::metrics::{MetricKind, DEFAULT_MINKOWSKI_P};
use crate::ranking::{describe_factors, rank_factors, FactorStats, RankingResult};
use crate::stats::{paired_t_test, PairedTestResult, TestConfig};
use crate::table::{self, ComparisonRow, FactorOrder, Style, Table};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
        }
    }
}

fn default_metrics() -> Vec<String> {
    ["cosine", "euclidean", "manhattan", "mahalanobis", "minkowski", "bray_curtis"]
        .map(String::from)
        .to_vec()
}

fn default_p() -> f64 {
    DEFAULT_MINKOWSKI_P
}

fn default_true() -> bool {
    true
}

fn default_covariance() -> String {
    CovarianceMethod::default().to_string()
}

fn default_output() -> PathBuf {
    PathBuf::from("riskrank-out")
}

/// Experiment settings. Relative paths in a config file are resolved against
/// the file's directory.
///
/// ```toml
/// dataset = "dataset.json"          # optional, defaults to the 25 reference factors
/// bert_fixture = "fixtures/bert.jsonl"
/// st_fixture = "fixtures/minilm.jsonl"
/// token_classifier = true
/// metrics = ["cosine", "euclidean", "manhattan", "mahalanobis", "minkowski", "bray_curtis"]
/// minkowski_p = 3.0
/// covariance = "pseudo_inverse"     # or "exact_inverse", "shrinkage:0.1"
/// survey = "survey.csv"
/// output_dir = "out"
///
/// [cv]
/// k = 10
/// seed = 42
///
/// [test]
/// alpha = 0.05
/// d_threshold = 0.5
/// d_variant = "pooled"
///
/// [labels]                          # optional label-phrase overrides
/// biomechanical = "biomechanical"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    /// Combined item + label fixture for the BERT + cosine model.
    #[serde(default)]
    pub bert_fixture: Option<PathBuf>,
    /// Combined item + label fixture for the sentence-transformer models.
    #[serde(default)]
    pub st_fixture: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub token_classifier: bool,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_p")]
    pub minkowski_p: f64,
    #[serde(default = "default_covariance")]
    pub covariance: String,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default)]
    pub survey: Option<PathBuf>,
    #[serde(default)]
    pub survey_skip_unknown_columns: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            bert_fixture: None,
            st_fixture: None,
            token_classifier: true,
            metrics: default_metrics(),
            minkowski_p: DEFAULT_MINKOWSKI_P,
            covariance: default_covariance(),
            cv: CvConfig::default(),
            test: TestConfig::default(),
            labels: BTreeMap::new(),
            survey: None,
            survey_skip_unknown_columns: false,
            output_dir: default_output(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = e
                .span()
                .map(|s| format!("config byte {}", s.start))
                .unwrap_or_else(|| "config".into());
            Error::parse(location, e.message().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.dataset,
            &mut config.bert_fixture,
            &mut config.st_fixture,
            &mut config.survey,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn covariance_method(&self) -> Result<CovarianceMethod> {
        self.covariance.parse()
    }

    /// Parsed metric list, in configured order.
    pub fn metric_kinds(&self) -> Result<Vec<MetricKind>> {
        let method = self.covariance_method()?;
        let kinds = self
            .metrics
            .iter()
            .map(|m| MetricKind::from_name(m, self.minkowski_p, method))
            .collect::<Result<Vec<_>>>()?;
        for (i, k) in kinds.iter().enumerate() {
            if kinds[..i].iter().any(|o| o.name() == k.name()) {
                return Err(Error::Param(format!("metric '{}' listed twice", k.name())));
            }
        }
        Ok(kinds)
    }

    pub fn validate(&self) -> Result<()> {
        let kinds = self.metric_kinds()?;
        if kinds.is_empty() && self.st_fixture.is_some() {
            return Err(Error::Param("metric list is empty".into()));
        }
        if self.cv.k < 2 {
            return Err(Error::Param(format!("cv.k must be at least 2, got {}", self.cv.k)));
        }
        self.test.validate()?;
        for key in self.labels.keys() {
            key.parse::<CategoryLabel>()?;
        }
        if self.bert_fixture.is_none() && self.st_fixture.is_none() && !self.token_classifier && self.survey.is_none() {
            return Err(Error::Param("nothing to run: no fixture, token classifier or survey configured".into()));
        }
        Ok(())
    }

    /// Models run by this config, in output order.
    pub fn models(&self) -> Result<Vec<ModelDef>> {
        let mut out = Vec::new();
        if self.bert_fixture.is_some() {
            out.push(ModelDef {
                name: "bert_cosine".into(),
                source: ModelSource::Bert,
                spec: ClassifierSpec::embedding(MetricKind::Cosine),
            });
        }
        if self.token_classifier {
            out.push(ModelDef {
                name: "nltk_jaccard".into(),
                source: ModelSource::Text,
                spec: ClassifierSpec::TokenJaccard,
            });
        }
        if self.st_fixture.is_some() {
            for kind in self.metric_kinds()? {
                out.push(ModelDef {
                    name: format!("st_{}", kind.name()),
                    source: ModelSource::SentenceTransformer,
                    spec: ClassifierSpec::embedding(kind),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Bert,
    SentenceTransformer,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDef {
    pub name: String,
    pub source: ModelSource,
    pub spec: ClassifierSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub spec: ClassifierSpec,
    /// Model id from the fixture header; `None` for the token classifier.
    pub embedding_model: Option<String>,
    pub predictions: Vec<Prediction>,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    pub result: Option<PairedTestResult>,
    /// Why no result could be computed, e.g. constant non-zero differences.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    /// Gold label of every evaluated item.
    pub gold: BTreeMap<String, CategoryLabel>,
    pub models: Vec<ModelResult>,
    pub macro_table: Vec<MacroRow>,
    pub cv: Vec<CvResult>,
    pub comparisons: Vec<Comparison>,
    pub ranking: Option<RankingResult>,
    pub descriptive: Option<Vec<FactorStats>>,
    pub warnings: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn read_input(path: &Path, role: &str, inputs: &mut Vec<InputDigest>) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    inputs.push(InputDigest {
        role: role.to_string(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

/// Hash of everything that can change results: resolved models and their
/// parameters, CV and test settings, label phrases and the content of every
/// input file. Paths and the output directory are excluded.
pub fn config_hash(config: &ExperimentConfig, inputs: &[InputDigest]) -> Result<String> {
    let models = config.models()?;
    let uses_minkowski = models
        .iter()
        .any(|m| matches!(m.spec, ClassifierSpec::EmbeddingMetric { metric: MetricKind::Minkowski { .. }, .. }));
    let uses_mahalanobis = models.iter().any(|m| m.spec.is_fitted());
    let canonical = serde_json::json!({
        "models": models,
        "minkowski_p": uses_minkowski.then_some(config.minkowski_p),
        "covariance": uses_mahalanobis.then(|| config.covariance_method().map(|m| m.to_string())).transpose()?,
        "cv": config.cv,
        "test": config.test,
        "labels": config.labels,
        "survey_skip_unknown_columns": config.survey_skip_unknown_columns,
        "inputs": inputs,
    });
    Ok(sha256_hex(canonical.to_string().as_bytes()))
}

/// The dataset's items taken from `items`, in dataset order. Also returns how
/// many records of `items` are not in the dataset.
pub fn align_items(items: &EmbeddingSet, dataset: &Dataset) -> Result<(EmbeddingSet, usize)> {
    let mut records = Vec::with_capacity(dataset.len());
    for item in dataset.items() {
        let r = items.get(&item.id).ok_or_else(|| {
            Error::schema(format!("fixture '{}'", items.model_id()), format!("no record for item '{}'", item.id))
        })?;
        records.push(r.clone());
    }
    let extra = items.len() - records.len();
    let aligned = EmbeddingSet::new(items.model_id(), items.dim(), items.is_normalized(), records)?;
    Ok((aligned, extra))
}

fn fixture_inputs(bytes: &[u8], dataset: &Dataset, warnings: &mut Vec<String>) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let fixture = read_fixture(bytes)?;
    warnings.extend(fixture.warnings);
    let (items, labels) = split_labels(&fixture.set);
    let (aligned, extra) = align_items(&items, dataset)?;
    if extra > 0 {
        warnings.push(format!(
            "fixture '{}' has {extra} records not in the dataset; ignored",
            fixture.header.model_id
        ));
    }
    Ok((aligned, labels))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let models = config.models().map_err(|e| e.in_stage("config"))?;
    let mut inputs = Vec::new();
    let mut warnings = Vec::new();

    let dataset = match &config.dataset {
        Some(path) => {
            let bytes = read_input(path, "dataset", &mut inputs).map_err(|e| e.in_stage("dataset"))?;
            let manifest: DatasetManifest = serde_json::from_slice(&bytes)
                .map_err(|e| Error::parse(path.display().to_string(), e.to_string()).in_stage("dataset"))?;
            Dataset::try_from(manifest).map_err(|e| e.in_stage("dataset"))?
        }
        None => Dataset::reference(),
    };
    let labels = labels_with_overrides(dataset.labels(), &config.labels).map_err(|e| e.in_stage("dataset"))?;
    let dataset = dataset.with_labels(labels);

    let mut load = |path: &Option<PathBuf>, role: &str| -> Result<Option<(EmbeddingSet, EmbeddingSet)>> {
        path.as_ref()
            .map(|p| {
                let bytes = read_input(p, role, &mut inputs)?;
                fixture_inputs(&bytes, &dataset, &mut warnings)
            })
            .transpose()
            .map_err(|e| e.in_stage(format!("load {role}")))
    };
    let bert = load(&config.bert_fixture, "bert_fixture")?;
    let st = load(&config.st_fixture, "st_fixture")?;
    let texts: Vec<(String, String)> = dataset.items().iter().map(|i| (i.id.clone(), i.text.clone())).collect();

    let input_for = |source: ModelSource| -> ClassifierInput<'_> {
        let (items, labels) = match source {
            ModelSource::Bert => bert.as_ref().expect("bert model implies bert fixture"),
            ModelSource::SentenceTransformer => st.as_ref().expect("st model implies st fixture"),
            ModelSource::Text => {
                return ClassifierInput::Texts {
                    items: &texts,
                    labels: dataset.labels(),
                }
            }
        };
        ClassifierInput::Embeddings { items, labels }
    };

    let gold: BTreeMap<&str, CategoryLabel> = dataset.items().iter().map(|i| (i.id.as_str(), i.gold)).collect();
    let mut results = Vec::with_capacity(models.len());
    for m in &models {
        let stage = format!("classify {}", m.name);
        let input = input_for(m.source);
        let predictions = classify_all(input, &m.spec).map_err(|e| e.in_stage(stage.clone()))?;
        let g: Vec<CategoryLabel> = predictions.iter().map(|p| gold[p.item_id.as_str()]).collect();
        let p: Vec<CategoryLabel> = predictions.iter().map(|p| p.predicted).collect();
        let cm = confusion(&g, &p).map_err(|e| e.in_stage(stage.clone()))?;
        let embedding_model = match input {
            ClassifierInput::Embeddings { items, .. } => Some(items.model_id().to_string()),
            ClassifierInput::Texts { .. } => None,
        };
        results.push(ModelResult {
            name: m.name.clone(),
            spec: m.spec,
            embedding_model,
            ties: predictions.iter().filter(|p| p.tie).count(),
            report: report(&cm),
            confusion: cm,
            predictions,
        });
    }

    let macro_rows = if results.is_empty() {
        Vec::new()
    } else {
        let named: Vec<(String, ClassificationReport)> =
            results.iter().map(|r| (r.name.clone(), r.report.clone())).collect();
        macro_table(&named).map_err(|e| e.in_stage("macro table"))?
    };

    let mut cv = Vec::with_capacity(models.len());
    if !models.is_empty() {
        let ids: Vec<&str> = dataset.items().iter().map(|i| i.id.as_str()).collect();
        let plan = make_folds(&ids, config.cv.k, config.cv.seed).map_err(|e| e.in_stage("crossval"))?;
        for m in &models {
            let r = run_cv(&m.name, &dataset, input_for(m.source), &m.spec, &plan)
                .map_err(|e| e.in_stage(format!("crossval {}", m.name)))?;
            cv.push(r);
        }
    }

    let mut comparisons = Vec::new();
    for i in 0..cv.len() {
        for j in i + 1..cv.len() {
            let (result, error) = match paired_t_test(&cv[i].fold_accuracies, &cv[j].fold_accuracies, &config.test) {
                Ok(r) => (Some(r), None),
                Err(e @ Error::ZeroVariance { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e.in_stage(format!("compare {} vs {}", cv[i].model_name, cv[j].model_name))),
            };
            comparisons.push(Comparison {
                model_a: cv[i].model_name.clone(),
                model_b: cv[j].model_name.clone(),
                result,
                error,
            });
        }
    }

    let (ranking, descriptive) = match &config.survey {
        Some(path) => {
            let bytes = read_input(path, "survey", &mut inputs).map_err(|e| e.in_stage("survey"))?;
            let options = SurveyOptions {
                skip_unknown_columns: config.survey_skip_unknown_columns,
            };
            let survey = read_survey(bytes.as_slice(), &options).map_err(|e| e.in_stage("survey"))?;
            let ranking = rank_factors(&survey).map_err(|e| e.in_stage("rank"))?;
            let descriptive = describe_factors(&survey).map_err(|e| e.in_stage("describe"))?;
            (Some(ranking), Some(descriptive))
        }
        None => (None, None),
    };

    Ok(ExperimentBundle {
        config_hash: config_hash(config, &inputs)?,
        seed: config.cv.seed,
        inputs,
        gold: dataset.items().iter().map(|i| (i.id.clone(), i.gold)).collect(),
        models: results,
        macro_table: macro_rows,
        cv,
        comparisons,
        ranking,
        descriptive,
        warnings,
    })
}

impl ExperimentBundle {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn comparison_rows(&self) -> Vec<ComparisonRow<'_>> {
        self.comparisons
            .iter()
            .map(|c| ComparisonRow {
                model_a: &c.model_a,
                model_b: &c.model_b,
                result: c.result.as_ref(),
                error: c.error.as_deref(),
            })
            .collect()
    }

    /// Every table of the bundle as `(file stem, table)` at full precision.
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let preds: Vec<(&str, &[Prediction])> =
            self.models.iter().map(|m| (m.name.as_str(), m.predictions.as_slice())).collect();
        let cms: Vec<(&str, &ConfusionMatrix)> = self.models.iter().map(|m| (m.name.as_str(), &m.confusion)).collect();
        let reports: Vec<(&str, &ClassificationReport)> =
            self.models.iter().map(|m| (m.name.as_str(), &m.report)).collect();
        let mut out = vec![
            ("predictions", table::predictions_table(&preds, Some(&self.gold), Style::Raw)),
            ("confusion", table::confusion_table(&cms)),
            ("report", table::report_table(&reports, Style::Raw)),
            ("macro", table::macro_table_view(&self.macro_table, Style::Raw)),
            ("cv", table::cv_table(&self.cv, Style::Raw)),
            ("comparisons", table::comparison_table(&self.comparison_rows(), Style::Raw)),
        ];
        if let Some(r) = &self.ranking {
            out.push(("ranking", table::ranking_table(r, FactorOrder::Rank, Style::Raw)));
        }
        if let Some(d) = &self.descriptive {
            out.push(("descriptive", table::descriptive_table(d, FactorOrder::Name, None, Style::Raw)));
        }
        out
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    data: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub created: String,
    pub models: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub files: Vec<BundleFile>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the bundle into `dir` (created if needed). JSON files carry the
/// config hash and seed; `manifest.json` lists every file with its SHA-256 and
/// is the only file containing a timestamp.
pub fn write_bundle(bundle: &ExperimentBundle, dir: &Path, created: &str) -> Result<BundleManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, &contents).map_err(|e| Error::io(&path, e))?;
        files.push(BundleFile {
            sha256: sha256_hex(contents.as_bytes()),
            name,
        });
        Ok(())
    };
    fn stamped<T: Serialize>(b: &ExperimentBundle, data: T) -> String {
        let mut s = serde_json::to_string_pretty(&Stamped {
            config_hash: &b.config_hash,
            seed: b.seed,
            data,
        })
        .expect("bundle serializes");
        s.push('\n');
        s
    }

    put("predictions.json".into(), stamped(bundle, bundle.models.iter().map(|m| (&m.name, &m.predictions)).collect::<BTreeMap<_, _>>()))?;
    put("confusion.json".into(), stamped(bundle, bundle.models.iter().map(|m| (&m.name, &m.confusion)).collect::<BTreeMap<_, _>>()))?;
    put("report.json".into(), stamped(bundle, bundle.models.iter().map(|m| (&m.name, &m.report)).collect::<BTreeMap<_, _>>()))?;
    put("macro.json".into(), stamped(bundle, &bundle.macro_table))?;
    put("cv.json".into(), stamped(bundle, &bundle.cv))?;
    put("comparisons.json".into(), stamped(bundle, &bundle.comparisons))?;
    if let Some(r) = &bundle.ranking {
        put("ranking.json".into(), stamped(bundle, r))?;
    }
    if let Some(d) = &bundle.descriptive {
        put("descriptive.json".into(), stamped(bundle, d))?;
    }
    for (stem, t) in bundle.tables() {
        put(format!("{stem}.csv"), t.to_csv())?;
    }
    files.sort_by(|a, b| a.name.cmp(&b.name));

    let manifest = BundleManifest {
        tool: "riskrank".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: bundle.config_hash.clone(),
        seed: bundle.seed,
        created: created.to_string(),
        models: bundle.models.iter().map(|m| m.name.clone()).collect(),
        inputs: bundle.inputs.clone(),
        warnings: bundle.warnings.clone(),
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Current UTC time as an RFC 3339 string, for [`write_bundle`].
pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Label set after applying the config's overrides to `base`.
pub fn labels_with_overrides(base: &LabelSet, overrides: &BTreeMap<String, String>) -> Result<LabelSet> {
    let mut labels = base.clone();
    for (key, phrase) in overrides {
        labels = labels.with_phrase(key.parse()?, phrase.clone());
    }
    Ok(labels)
}
