//! Zero-shot classification of short texts by embedding similarity to
//! category labels, with evaluation, cross-validated model comparison and
//! mode-based ranking of survey responses.

pub mod classifier;
pub mod covariance;
pub mod crossval;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod ranking;
pub mod stats;
pub mod synthetic;
pub mod table;
pub mod textsim;

pub use classifier::{classify_all, ClassifierInput, ClassifierSpec, FittedClassifier, Prediction, LABEL_ID_PREFIX};
pub use covariance::{CovarianceMethod, CovarianceModel};
pub use crossval::{make_folds, run_cv, CvResult, FoldPlan};
pub use data::{
    validate_dataset, CategoryLabel, Dataset, DatasetManifest, EmbeddingRecord, EmbeddingSet, LabelSet, LabeledItem,
    ValidationReport, Vector, REFERENCE_FACTORS,
};
pub use error::{Error, Result};
pub use evaluation::{confusion, macro_table, report, ClassificationReport, ConfusionMatrix, MacroRow};
pub use metrics::{Direction, MetricKind, MetricSpec, DEFAULT_MINKOWSKI_P};
pub use pipeline::{run_experiment, write_bundle, ExperimentBundle, ExperimentConfig};
pub use ranking::{describe_factors, rank_factors, RankingResult, SurveyMatrix};
pub use stats::{paired_t_test, PairedTestResult, TestConfig};
pub use textsim::{jaccard, tokenize, TokenSet};
