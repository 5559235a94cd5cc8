//! Argument parsing, command execution and output rendering for `riskrank`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use riskrank_core::classifier::{classify_all, split_labels, ClassifierInput, ClassifierSpec, Prediction};
use riskrank_core::io::{load_dataset, load_fixture_full, load_survey_with, SurveyOptions};
use riskrank_core::pipeline::{self, align_items, labels_with_overrides, Comparison};
use riskrank_core::ranking::FactorStats;
use riskrank_core::stats::EffectSizeVariant;
use riskrank_core::table::{self, ComparisonRow, FactorOrder, Style, Table};
use riskrank_core::{
    confusion, describe_factors, make_folds, paired_t_test, rank_factors, report, run_cv, run_experiment,
    validate_dataset, write_bundle, CategoryLabel, ClassificationReport, ConfusionMatrix, CovarianceMethod, CvResult,
    Dataset, EmbeddingSet, Error, ExperimentConfig, MetricKind, PairedTestResult, RankingResult, TestConfig,
    ValidationReport,
};

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  1  data error (the underlying error is printed verbatim on stderr)
  2  usage error

Environment:
  RISKRANK_CONFIG  default config file for `run-all`
  RUST_LOG         log filter (default: warn)";

#[derive(Debug, Parser)]
#[command(name = "riskrank", version, about = "Zero-shot embedding classification benchmarks and survey ranking", after_help = AFTER_HELP)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned text, percentages at two decimals.
    Table,
    /// Full-precision JSON.
    Json,
    /// Full-precision CSV of the primary table.
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset manifest and/or embedding fixtures.
    Validate(ValidateArgs),
    /// Predict a label for every fixture item.
    Classify(ModelArgs),
    /// Classify dataset items and report precision, recall and F1 against gold labels.
    Evaluate(ModelArgs),
    /// K-fold cross-validated accuracy of one classifier.
    Crossval(CrossvalArgs),
    /// Paired t-test and Cohen's d between two `crossval --format json` results.
    Compare(CompareArgs),
    /// Mode-based ranking of survey factors.
    Rank(SurveyArgs),
    /// Descriptive statistics per survey factor.
    Describe(SurveyArgs),
    /// Run a full experiment from a config file and write the output bundle.
    RunAll(RunAllArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset manifest (JSON). Defaults to the built-in 25-factor corpus.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Embedding fixture to check; may be repeated.
    #[arg(long)]
    pub fixture: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricName {
    Cosine,
    Euclidean,
    Manhattan,
    Minkowski,
    BrayCurtis,
    Mahalanobis,
    /// Token-set Jaccard on raw texts; needs no fixture.
    Jaccard,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Item embeddings (JSONL fixture); records with ids `label:<category>` are used as labels.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Separate label-embedding fixture.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricName::Cosine)]
    pub metric: MetricName,
    /// Minkowski order.
    #[arg(long, default_value_t = riskrank_core::DEFAULT_MINKOWSKI_P)]
    pub p: f64,
    /// Mahalanobis inverse: exact_inverse, pseudo_inverse or shrinkage:<lambda>.
    #[arg(long, default_value = "pseudo_inverse")]
    pub covariance: String,
    /// Use vectors as stored instead of L2-normalizing them.
    #[arg(long)]
    pub no_normalize: bool,
    /// Dataset manifest with gold labels. Defaults to the built-in corpus.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Label text used by the Jaccard classifier, as `category=phrase`; may be repeated.
    #[arg(long = "label-phrase", value_name = "CATEGORY=PHRASE")]
    pub label_phrases: Vec<String>,
    /// Model name shown in output.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = pipeline::DEFAULT_FOLDS)]
    pub k: usize,
    #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First crossval result (JSON).
    #[arg(long)]
    pub a: PathBuf,
    /// Second crossval result (JSON).
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub d_threshold: f64,
    /// Cohen's d used by the decision rule: pooled or paired.
    #[arg(long, default_value = "pooled")]
    pub d_variant: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OrderArg {
    /// Alphabetical by factor.
    #[default]
    Name,
    /// By final rank.
    Rank,
}

impl From<OrderArg> for FactorOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Name => FactorOrder::Name,
            OrderArg::Rank => FactorOrder::Rank,
        }
    }
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// Survey CSV: header of factor names, one row per participant.
    #[arg(long)]
    pub survey: PathBuf,
    #[arg(long, value_enum, default_value_t = OrderArg::Name)]
    pub order: OrderArg,
    /// Ignore columns that are not one of the 25 factors.
    #[arg(long)]
    pub skip_unknown_columns: bool,
}

#[derive(Debug, Args)]
pub struct RunAllArgs {
    /// Experiment config (TOML).
    #[arg(long, env = "RISKRANK_CONFIG")]
    pub config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides `cv.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `cv.k`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Overrides `survey`.
    #[arg(long)]
    pub survey: Option<PathBuf>,
    /// Overrides `dataset`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Overrides `bert_fixture`.
    #[arg(long)]
    pub bert_fixture: Option<PathBuf>,
    /// Overrides `st_fixture`.
    #[arg(long)]
    pub st_fixture: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

/// What a command prints, and the exit code when it completed.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

/// Titled tables rendered by `--format table`; CSV uses the first one.
pub trait Render: Serialize {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)>;
}

pub fn render<T: Render>(value: &T, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("output serializes");
            s.push('\n');
            s
        }
        Format::Csv => value
            .tables(Style::Raw)
            .into_iter()
            .next()
            .map(|(_, t)| t.to_csv())
            .unwrap_or_default(),
        Format::Table => {
            let tables = value.tables(Style::Display);
            let titled = tables.len() > 1;
            tables
                .into_iter()
                .filter(|(_, t)| !titled || !t.rows.is_empty())
                .map(|(title, t)| if titled { format!("{title}\n{}", t.render()) } else { t.render() })
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCheck {
    pub path: String,
    pub model_id: String,
    pub dim: usize,
    pub items: usize,
    pub labels: usize,
    pub normalized: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOutput {
    pub valid: bool,
    pub dataset: ValidationReport,
    pub fixtures: Vec<FixtureCheck>,
}

impl Render for ValidateOutput {
    fn tables(&self, _: Style) -> Vec<(&'static str, Table)> {
        let mut fixtures = Table::new(["path", "model_id", "dim", "items", "labels", "normalized", "warnings"]);
        for f in &self.fixtures {
            fixtures.push(vec![
                f.path.clone(),
                f.model_id.clone(),
                f.dim.to_string(),
                f.items.to_string(),
                f.labels.to_string(),
                f.normalized.to_string(),
                f.warnings.join("; "),
            ]);
        }
        let mut status = Table::new(["valid", "violations", "fixtures"]);
        status.push(vec![
            self.valid.to_string(),
            self.dataset.violations.len().to_string(),
            self.fixtures.len().to_string(),
        ]);
        vec![
            ("dataset violations", table::validation_table(&self.dataset)),
            ("fixtures", fixtures),
            ("summary", status),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutput {
    pub model: String,
    pub spec: ClassifierSpec,
    pub predictions: Vec<Prediction>,
}

impl Render for ClassifyOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        vec![(
            "predictions",
            table::predictions_table(&[(&self.model, &self.predictions)], None, style),
        )]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub model: String,
    pub spec: ClassifierSpec,
    pub gold: BTreeMap<String, CategoryLabel>,
    pub predictions: Vec<Prediction>,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

impl Render for EvaluateOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        vec![
            ("classification report", table::report_table(&[(&self.model, &self.report)], style)),
            ("confusion matrix (rows = gold)", table::confusion_table(&[(&self.model, &self.confusion)])),
            (
                "predictions",
                table::predictions_table(&[(&self.model, &self.predictions)], Some(&self.gold), style),
            ),
        ]
    }
}

impl Render for CvResult {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        vec![
            ("fold accuracies", table::cv_table(std::slice::from_ref(self), style)),
            ("fold assignments", table::folds_table(&self.plan)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutput {
    pub model_a: String,
    pub model_b: String,
    pub config: TestConfig,
    pub result: PairedTestResult,
}

impl Render for CompareOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        let row = ComparisonRow {
            model_a: &self.model_a,
            model_b: &self.model_b,
            result: Some(&self.result),
            error: None,
        };
        vec![("paired t-test", table::comparison_table(&[row], style))]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOutput {
    #[serde(skip)]
    pub order: FactorOrder,
    #[serde(flatten)]
    pub ranking: RankingResult,
}

fn ranking_notes(r: &RankingResult) -> (Table, Table) {
    let mut ties = Table::new(["tie break"]);
    for t in &r.tie_breaks_applied {
        ties.push(vec![t.clone()]);
    }
    let mut quality = Table::new(["participants", "non_permutation_rows"]);
    quality.push(vec![
        r.data_quality.participants.to_string(),
        r.data_quality.non_permutation_rows.len().to_string(),
    ]);
    (ties, quality)
}

impl Render for RankOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        let (ties, quality) = ranking_notes(&self.ranking);
        vec![
            ("ranking", table::ranking_table(&self.ranking, self.order, style)),
            ("tie breaks applied", ties),
            ("data quality", quality),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeOutput {
    #[serde(skip)]
    pub order: FactorOrder,
    pub factors: Vec<FactorStats>,
    pub ranking: RankingResult,
}

impl Render for DescribeOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        vec![(
            "descriptive statistics",
            table::descriptive_table(&self.factors, self.order, Some(&self.ranking), style),
        )]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub ties: usize,
    pub cv_mean: f64,
    pub cv_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAllOutput {
    pub output_dir: String,
    pub config_hash: String,
    pub seed: u64,
    pub models: Vec<ModelSummary>,
    pub comparisons: Vec<Comparison>,
    pub ranking: Option<RankingResult>,
    pub files: Vec<String>,
}

impl Render for RunAllOutput {
    fn tables(&self, style: Style) -> Vec<(&'static str, Table)> {
        let mut models = Table::new([
            "model",
            "accuracy",
            "macro_precision",
            "macro_recall",
            "macro_f1",
            "ties",
            "cv_mean",
            "cv_std",
        ]);
        let pct = |x: f64| match style {
            Style::Display => riskrank_core::evaluation::display_pct(x),
            Style::Raw => x.to_string(),
        };
        let num = |x: f64| match style {
            Style::Display => format!("{x:.4}"),
            Style::Raw => x.to_string(),
        };
        for m in &self.models {
            models.push(vec![
                m.model.clone(),
                pct(m.accuracy),
                pct(m.macro_precision),
                pct(m.macro_recall),
                pct(m.macro_f1),
                m.ties.to_string(),
                num(m.cv_mean),
                num(m.cv_std),
            ]);
        }
        let rows: Vec<ComparisonRow<'_>> = self
            .comparisons
            .iter()
            .map(|c| ComparisonRow {
                model_a: &c.model_a,
                model_b: &c.model_b,
                result: c.result.as_ref(),
                error: c.error.as_deref(),
            })
            .collect();
        let mut out = vec![("models", models), ("pairwise comparisons", table::comparison_table(&rows, style))];
        if let Some(r) = &self.ranking {
            out.push(("ranking", table::ranking_table(r, FactorOrder::Rank, style)));
        }
        let mut bundle = Table::new(["output_dir", "config_hash", "seed", "files"]);
        bundle.push(vec![
            self.output_dir.clone(),
            self.config_hash.clone(),
            self.seed.to_string(),
            self.files.len().to_string(),
        ]);
        out.push(("bundle", bundle));
        out
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_dataset_or_reference(path: Option<&Path>) -> Result<Dataset, Error> {
    match path {
        Some(p) => load_dataset(p),
        None => Ok(Dataset::reference()),
    }
}

/// Resolved classifier inputs for the model-level subcommands.
struct Prepared {
    name: String,
    spec: ClassifierSpec,
    dataset: Dataset,
    /// Every non-label fixture record.
    items: Option<EmbeddingSet>,
    labels: Option<EmbeddingSet>,
    texts: Vec<(String, String)>,
}

impl Prepared {
    fn input<'a>(&'a self, items: Option<&'a EmbeddingSet>) -> ClassifierInput<'a> {
        match (&self.spec, items, &self.labels) {
            (ClassifierSpec::EmbeddingMetric { .. }, Some(items), Some(labels)) => {
                ClassifierInput::Embeddings { items, labels }
            }
            _ => ClassifierInput::Texts {
                items: &self.texts,
                labels: self.dataset.labels(),
            },
        }
    }

    fn dataset_items(&self) -> Result<Option<EmbeddingSet>, Error> {
        match &self.items {
            Some(items) => {
                let (aligned, extra) = align_items(items, &self.dataset)?;
                if extra > 0 {
                    log::warn!("{extra} fixture records are not in the dataset and were ignored");
                }
                Ok(Some(aligned))
            }
            None => Ok(None),
        }
    }
}

fn prepare(args: &ModelArgs) -> Result<Prepared, CliError> {
    let mut overrides = BTreeMap::new();
    for lp in &args.label_phrases {
        let (label, phrase) = lp
            .split_once('=')
            .ok_or_else(|| usage(format!("--label-phrase expects CATEGORY=PHRASE, got '{lp}'")))?;
        overrides.insert(label.trim().to_string(), phrase.trim().to_string());
    }
    let dataset = load_dataset_or_reference(args.dataset.as_deref())?;
    let labels = labels_with_overrides(dataset.labels(), &overrides)?;
    let dataset = dataset.with_labels(labels);
    let texts = dataset.items().iter().map(|i| (i.id.clone(), i.text.clone())).collect();

    if args.metric == MetricName::Jaccard {
        if args.fixture.is_some() || args.labels.is_some() {
            return Err(usage("--metric jaccard works on dataset texts and takes no --fixture or --labels"));
        }
        return Ok(Prepared {
            name: args.name.clone().unwrap_or_else(|| "nltk_jaccard".into()),
            spec: ClassifierSpec::TokenJaccard,
            dataset,
            items: None,
            labels: None,
            texts,
        });
    }

    let method: CovarianceMethod = args.covariance.parse().map_err(|e: Error| usage(e.to_string()))?;
    let metric_name = args.metric.to_possible_value().expect("no skipped variants").get_name().to_string();
    let kind = MetricKind::from_name(&metric_name, args.p, method).map_err(|e| usage(e.to_string()))?;
    let fixture_path = args
        .fixture
        .as_ref()
        .ok_or_else(|| usage(format!("--metric {metric_name} needs --fixture")))?;
    let fixture = load_fixture_full(fixture_path)?;
    let (items, inline_labels) = split_labels(&fixture.set);
    let labels = match &args.labels {
        Some(path) => {
            let set = load_fixture_full(path)?.set;
            if set.dim() != items.dim() {
                return Err(Error::schema(
                    path.display().to_string(),
                    format!("label vectors have dim {} but item vectors have dim {}", set.dim(), items.dim()),
                )
                .into());
            }
            set
        }
        None if inline_labels.is_empty() => {
            return Err(Error::schema(
                fixture_path.display().to_string(),
                "no label records (ids 'label:<category>'); pass --labels",
            )
            .into())
        }
        None => inline_labels,
    };
    Ok(Prepared {
        name: args
            .name
            .clone()
            .unwrap_or_else(|| format!("{}_{}", fixture.header.model_id, kind.name())),
        spec: ClassifierSpec::EmbeddingMetric {
            metric: kind,
            normalize_inputs: !args.no_normalize,
        },
        dataset,
        items: Some(items),
        labels: Some(labels),
        texts,
    })
}

fn validate(args: &ValidateArgs) -> Result<(ValidateOutput, bool), CliError> {
    let dataset = match &args.dataset {
        Some(p) => validate_dataset(&riskrank_core::io::load_manifest(p)?),
        None => validate_dataset(&Dataset::reference().to_manifest()),
    };
    let mut fixtures = Vec::new();
    for path in &args.fixture {
        let f = load_fixture_full(path)?;
        let (items, labels) = split_labels(&f.set);
        fixtures.push(FixtureCheck {
            path: path.display().to_string(),
            model_id: f.header.model_id.clone(),
            dim: f.set.dim(),
            items: items.len(),
            labels: labels.len(),
            normalized: f.set.is_normalized(),
            warnings: f.warnings,
        });
    }
    let valid = dataset.is_valid();
    Ok((ValidateOutput { valid, dataset, fixtures }, valid))
}

fn classify(args: &ModelArgs) -> Result<ClassifyOutput, CliError> {
    let p = prepare(args)?;
    let predictions = classify_all(p.input(p.items.as_ref()), &p.spec)?;
    Ok(ClassifyOutput {
        model: p.name,
        spec: p.spec,
        predictions,
    })
}

fn evaluate(args: &ModelArgs) -> Result<EvaluateOutput, CliError> {
    let p = prepare(args)?;
    let items = p.dataset_items()?;
    let predictions = classify_all(p.input(items.as_ref()), &p.spec)?;
    let gold: BTreeMap<String, CategoryLabel> = p.dataset.items().iter().map(|i| (i.id.clone(), i.gold)).collect();
    let g: Vec<CategoryLabel> = predictions.iter().map(|x| gold[&x.item_id]).collect();
    let pred: Vec<CategoryLabel> = predictions.iter().map(|x| x.predicted).collect();
    let cm = confusion(&g, &pred)?;
    Ok(EvaluateOutput {
        model: p.name,
        spec: p.spec,
        gold,
        predictions,
        report: report(&cm),
        confusion: cm,
    })
}

fn crossval(args: &CrossvalArgs) -> Result<CvResult, CliError> {
    let p = prepare(&args.model)?;
    let items = p.dataset_items()?;
    let ids: Vec<&str> = p.dataset.items().iter().map(|i| i.id.as_str()).collect();
    let plan = make_folds(&ids, args.k, args.seed)?;
    Ok(run_cv(&p.name, &p.dataset, p.input(items.as_ref()), &p.spec, &plan)?)
}

fn read_cv(path: &Path) -> Result<CvResult, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Error::parse(
            format!("{} line {} column {}", path.display(), e.line(), e.column()),
            e.to_string(),
        )
    })
}

fn compare(args: &CompareArgs) -> Result<CompareOutput, CliError> {
    let config = TestConfig {
        alpha: args.alpha,
        d_threshold: args.d_threshold,
        d_variant: args
            .d_variant
            .parse::<EffectSizeVariant>()
            .map_err(|e| usage(e.to_string()))?,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let a = read_cv(&args.a)?;
    let b = read_cv(&args.b)?;
    if a.plan.assignments != b.plan.assignments {
        log::warn!("the two results use different fold plans; pairing is by fold index");
    }
    let result = paired_t_test(&a.fold_accuracies, &b.fold_accuracies, &config)?;
    Ok(CompareOutput {
        model_a: a.model_name,
        model_b: b.model_name,
        config,
        result,
    })
}

fn survey(args: &SurveyArgs) -> Result<riskrank_core::SurveyMatrix, Error> {
    load_survey_with(
        &args.survey,
        &SurveyOptions {
            skip_unknown_columns: args.skip_unknown_columns,
        },
    )
}

fn rank(args: &SurveyArgs) -> Result<RankOutput, CliError> {
    let ranking = rank_factors(&survey(args)?)?;
    Ok(RankOutput {
        order: args.order.into(),
        ranking,
    })
}

fn describe(args: &SurveyArgs) -> Result<DescribeOutput, CliError> {
    let s = survey(args)?;
    Ok(DescribeOutput {
        order: args.order.into(),
        factors: describe_factors(&s)?,
        ranking: rank_factors(&s)?,
    })
}

fn run_all(args: &RunAllArgs) -> Result<RunAllOutput, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(v) = &args.output_dir {
        config.output_dir = v.clone();
    }
    if let Some(v) = args.seed {
        config.cv.seed = v;
    }
    if let Some(v) = args.k {
        config.cv.k = v;
    }
    if let Some(v) = &args.survey {
        config.survey = Some(v.clone());
    }
    if let Some(v) = &args.dataset {
        config.dataset = Some(v.clone());
    }
    if let Some(v) = &args.bert_fixture {
        config.bert_fixture = Some(v.clone());
    }
    if let Some(v) = &args.st_fixture {
        config.st_fixture = Some(v.clone());
    }
    let bundle = run_experiment(&config)?;
    for w in &bundle.warnings {
        log::warn!("{w}");
    }
    let manifest = write_bundle(&bundle, &config.output_dir, &pipeline::timestamp_now())
        .map_err(|e| e.in_stage("write bundle"))?;
    let models = bundle
        .models
        .iter()
        .zip(&bundle.cv)
        .map(|(m, cv)| ModelSummary {
            model: m.name.clone(),
            accuracy: m.report.accuracy,
            macro_precision: m.report.macro_precision,
            macro_recall: m.report.macro_recall,
            macro_f1: m.report.macro_f1,
            ties: m.ties,
            cv_mean: cv.mean,
            cv_std: cv.std,
        })
        .collect();
    let mut files: Vec<String> = manifest.files.into_iter().map(|f| f.name).collect();
    files.push(pipeline::MANIFEST_FILE.to_string());
    Ok(RunAllOutput {
        output_dir: config.output_dir.display().to_string(),
        config_hash: bundle.config_hash,
        seed: bundle.seed,
        models,
        comparisons: bundle.comparisons,
        ranking: bundle.ranking,
        files,
    })
}

/// Runs a parsed command and renders its output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let ok = |stdout: String| Outcome { stdout, exit_code: 0 };
    let f = cli.format;
    Ok(match &cli.command {
        Command::Validate(a) => {
            let (out, valid) = validate(a)?;
            Outcome {
                stdout: render(&out, f),
                exit_code: if valid { 0 } else { 1 },
            }
        }
        Command::Classify(a) => ok(render(&classify(a)?, f)),
        Command::Evaluate(a) => ok(render(&evaluate(a)?, f)),
        Command::Crossval(a) => ok(render(&crossval(a)?, f)),
        Command::Compare(a) => ok(render(&compare(a)?, f)),
        Command::Rank(a) => ok(render(&rank(a)?, f)),
        Command::Describe(a) => ok(render(&describe(a)?, f)),
        Command::RunAll(a) => ok(render(&run_all(a)?, f)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["riskrank", "evaluate", "--metric", "minkowski", "--fixture", "f"]).unwrap();
        match cli.command {
            Command::Evaluate(a) => {
                assert_eq!(a.p, 3.0);
                assert_eq!(a.covariance, "pseudo_inverse");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cli.format, Format::Table);
    }

    #[test]
    fn unknown_flag_rejected() {
        let err = Cli::try_parse_from(["riskrank", "rank", "--survey", "s.csv", "--bogus"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn jaccard_needs_no_fixture() {
        let cli = Cli::try_parse_from(["riskrank", "evaluate", "--metric", "jaccard"]).unwrap();
        let out = execute(&cli).unwrap();
        assert!(out.stdout.contains("20.00%"), "{}", out.stdout);
    }

    #[test]
    fn embedding_metric_without_fixture_is_usage_error() {
        let cli = Cli::try_parse_from(["riskrank", "classify", "--metric", "euclidean"]).unwrap();
        assert_eq!(execute(&cli).unwrap_err().exit_code(), 2);
    }
}
