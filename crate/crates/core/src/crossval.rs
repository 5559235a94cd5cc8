//! Seeded k-fold partitioning and per-fold accuracy collection.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::classifier::{classify_texts, ClassifierInput, ClassifierSpec, FittedClassifier, Prediction};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::mean_std;

/// Multiplier of the 64-bit linear congruential generator driving fold
/// shuffles (Knuth's MMIX constants).
pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
/// Increment of the fold-shuffle generator.
pub const LCG_INCREMENT: u64 = 1442695040888963407;

/// `state ← state·LCG_MULTIPLIER + LCG_INCREMENT (mod 2⁶⁴)`; draws use the
/// high 32 bits of the new state.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        (self.state >> 32) as u32
    }

    /// Uniform-ish integer in `[0, bound)` by multiply-shift on 32 bits.
    pub fn below(&mut self, bound: u32) -> u32 {
        ((self.next_u32() as u64 * bound as u64) >> 32) as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub id: String,
    pub fold: usize,
}

/// Fold index for every item, in the original item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<FoldAssignment>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.iter().find(|a| a.id == id).map(|a| a.fold)
    }

    /// Item ids of each fold, in original item order.
    pub fn folds(&self) -> Vec<Vec<&str>> {
        let mut folds = vec![Vec::new(); self.k];
        for a in &self.assignments {
            folds[a.fold].push(a.id.as_str());
        }
        folds
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        self.folds().iter().map(Vec::len).collect()
    }
}

/// Shuffles `item_ids` with [`Lcg64`] seeded by `seed` (Fisher–Yates from the
/// back) and deals the shuffled sequence round-robin into `k` folds.
pub fn make_folds<S: AsRef<str>>(item_ids: &[S], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = item_ids.len();
    if k < 2 {
        return Err(Error::Param(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Param(format!("k = {k} exceeds the item count {n}")));
    }
    let mut seen = HashSet::new();
    for id in item_ids {
        if !seen.insert(id.as_ref()) {
            return Err(Error::Param(format!("duplicate item id '{}'", id.as_ref())));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Lcg64::new(seed);
    for i in (1..n).rev() {
        let j = rng.below((i + 1) as u32) as usize;
        order.swap(i, j);
    }
    let mut fold = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        fold[idx] = pos % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments: item_ids
            .iter()
            .zip(fold)
            .map(|(id, fold)| FoldAssignment {
                id: id.as_ref().to_string(),
                fold,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model_name: String,
    pub plan: FoldPlan,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (denominator k − 1).
    pub std: f64,
    /// Whether each item was classified correctly while held out.
    pub item_correct: BTreeMap<String, bool>,
}

/// Runs one pass over `plan`: every fold is held out once, data-dependent
/// metric state is fitted on the remaining items, and held-out accuracy is
/// recorded per fold.
pub fn run_cv(
    model_name: &str,
    dataset: &Dataset,
    input: ClassifierInput<'_>,
    spec: &ClassifierSpec,
    plan: &FoldPlan,
) -> Result<CvResult> {
    let plan_ids: HashSet<&str> = plan.assignments.iter().map(|a| a.id.as_str()).collect();
    if plan_ids.len() != dataset.len() || dataset.items().iter().any(|i| !plan_ids.contains(i.id.as_str())) {
        return Err(Error::Param("fold plan does not cover exactly the dataset items".into()));
    }

    let mut item_correct = BTreeMap::new();
    let mut fold_accuracies = Vec::with_capacity(plan.k);
    for (f, test_ids) in plan.folds().into_iter().enumerate() {
        let test: HashSet<&str> = test_ids.iter().copied().collect();
        let predictions = predict_fold(input, spec, &test, f)?;
        if predictions.len() != test.len() {
            return Err(Error::Param(format!(
                "fold {f}: {} of {} held-out items have inputs",
                predictions.len(),
                test.len()
            )));
        }
        let mut correct = 0usize;
        for p in &predictions {
            let gold = dataset
                .item(&p.item_id)
                .ok_or_else(|| Error::Param(format!("item '{}' is not in the dataset", p.item_id)))?
                .gold;
            let ok = p.predicted == gold;
            correct += ok as usize;
            item_correct.insert(p.item_id.clone(), ok);
        }
        fold_accuracies.push(correct as f64 / predictions.len() as f64);
    }
    let (mean, std) = mean_std(&fold_accuracies);
    Ok(CvResult {
        model_name: model_name.to_string(),
        plan: plan.clone(),
        fold_accuracies,
        mean,
        std,
        item_correct,
    })
}

fn predict_fold(
    input: ClassifierInput<'_>,
    spec: &ClassifierSpec,
    test: &HashSet<&str>,
    fold: usize,
) -> Result<Vec<Prediction>> {
    match (input, spec) {
        (
            ClassifierInput::Embeddings { items, labels },
            ClassifierSpec::EmbeddingMetric {
                metric,
                normalize_inputs,
            },
        ) => {
            let held_out = items.filter(|id| test.contains(id));
            let train = items.filter(|id| !test.contains(id));
            if metric.is_fitted() && train.len() < 2 {
                return Err(Error::Param(format!(
                    "fold {fold}: {} training item(s), covariance needs at least 2",
                    train.len()
                )));
            }
            FittedClassifier::fit(*metric, *normalize_inputs, labels, &train)?.predict(&held_out)
        }
        (ClassifierInput::Texts { items, labels }, ClassifierSpec::TokenJaccard) => {
            let held_out: Vec<(String, String)> = items
                .iter()
                .filter(|(id, _)| test.contains(id.as_str()))
                .cloned()
                .collect();
            Ok(classify_texts(&held_out, labels))
        }
        _ => Err(Error::Param("classifier family does not match its inputs".into())),
    }
}
