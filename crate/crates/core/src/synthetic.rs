//! Deterministic synthetic embeddings and survey responses.
//!
//! Each category gets a random unit prototype; an item's vector is its gold
//! category's prototype plus uniform noise of amplitude `spread`, re-normalized.
//! Label records are the prototypes themselves.

use crate::classifier::LABEL_ID_PREFIX;
use crate::crossval::Lcg64;
use crate::data::{CategoryLabel, Dataset, EmbeddingRecord, EmbeddingSet, Vector};
use crate::error::Result;
use crate::ranking::SurveyMatrix;

fn uniform(rng: &mut Lcg64) -> f64 {
    rng.next_u32() as f64 / 4_294_967_296.0 * 2.0 - 1.0
}

fn unit(v: Vec<f64>) -> Result<Vector> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Vector::new(v.into_iter().map(|x| x / n).collect())
}

/// Combined item + `label:` fixture set for `dataset`.
pub fn synthetic_embeddings(dataset: &Dataset, model_id: &str, dim: usize, spread: f64, seed: u64) -> Result<EmbeddingSet> {
    let mut rng = Lcg64::new(seed);
    let prototypes: Vec<Vec<f64>> = CategoryLabel::ALL
        .iter()
        .map(|_| (0..dim).map(|_| uniform(&mut rng)).collect())
        .collect();
    let mut records = Vec::with_capacity(dataset.len() + prototypes.len());
    for item in dataset.items() {
        let p = &prototypes[item.gold.index()];
        let v = p.iter().map(|x| x + spread * uniform(&mut rng)).collect();
        records.push(EmbeddingRecord {
            id: item.id.clone(),
            text: item.text.clone(),
            vector: unit(v)?,
        });
    }
    for (label, p) in CategoryLabel::ALL.iter().zip(prototypes) {
        records.push(EmbeddingRecord {
            id: format!("{LABEL_ID_PREFIX}{label}"),
            text: dataset.labels().phrase(*label).to_string(),
            vector: unit(p)?,
        });
    }
    EmbeddingSet::new(model_id, dim, true, records)
}

/// `participants` rows, each a permutation of `1..=factors.len()` in which
/// earlier columns tend to receive smaller (more severe) ranks.
pub fn synthetic_survey(factors: &[String], participants: usize, seed: u64) -> Result<SurveyMatrix> {
    let mut rng = Lcg64::new(seed);
    let n = factors.len();
    let rows = (0..participants)
        .map(|_| {
            let mut keyed: Vec<(f64, usize)> = (0..n)
                .map(|c| (c as f64 + 6.0 * uniform(&mut rng), c))
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut row = vec![0u32; n];
            for (rank, (_, c)) in keyed.into_iter().enumerate() {
                row[c] = rank as u32 + 1;
            }
            row
        })
        .collect();
    SurveyMatrix::new(factors.to_vec(), rows)
}
