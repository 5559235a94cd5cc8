//! Mode-based severity ranking of survey responses.
//!
//! Respondents score each factor on a 1–25 scale where 1 is most severe. A
//! factor's ranking score is the most frequent score it received; factors are
//! then ordered by that mode, with ties broken by mean score and then name.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{descriptive, Descriptive};

pub const SCALE_MIN: u32 = 1;
pub const SCALE_MAX: u32 = 25;

/// Participants × factors matrix of severity scores in `[SCALE_MIN, SCALE_MAX]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyMatrix {
    factors: Vec<String>,
    responses: Vec<Vec<u32>>,
}

impl SurveyMatrix {
    pub fn new(factors: Vec<String>, responses: Vec<Vec<u32>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Param("survey needs at least one factor".into()));
        }
        let mut seen = HashSet::new();
        for f in &factors {
            if !seen.insert(f.to_lowercase()) {
                return Err(Error::Param(format!("duplicate factor name '{f}'")));
            }
        }
        for (r, row) in responses.iter().enumerate() {
            if row.len() != factors.len() {
                return Err(Error::schema(
                    format!("row {}", r + 1),
                    format!("{} cells for {} factors", row.len(), factors.len()),
                ));
            }
            for (c, &v) in row.iter().enumerate() {
                if !(SCALE_MIN..=SCALE_MAX).contains(&v) {
                    return Err(Error::Range {
                        row: r + 1,
                        column: factors[c].clone(),
                        value: v as i64,
                        min: SCALE_MIN as i64,
                        max: SCALE_MAX as i64,
                    });
                }
            }
        }
        Ok(SurveyMatrix { factors, responses })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn responses(&self) -> &[Vec<u32>] {
        &self.responses
    }

    pub fn participants(&self) -> usize {
        self.responses.len()
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        self.responses.iter().map(|row| row[c]).collect()
    }

    /// 1-based indices of rows that are not a permutation of
    /// `1..=factors.len()`.
    pub fn non_permutation_rows(&self) -> Vec<usize> {
        let n = self.factors.len() as u32;
        self.responses
            .iter()
            .enumerate()
            .filter(|(_, row)| {
                let mut sorted = (*row).clone();
                sorted.sort_unstable();
                !sorted.iter().copied().eq(1..=n)
            })
            .map(|(i, _)| i + 1)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub value: u32,
    pub count: usize,
    /// Several values share the top count; `value` is the smallest of them.
    pub multimodal: bool,
}

/// Most frequent value; ties resolve to the smallest (most severe) value.
pub fn mode_of(column: &[u32]) -> Result<ModeSummary> {
    if column.is_empty() {
        return Err(Error::Param("mode of an empty column".into()));
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in column {
        *counts.entry(v).or_default() += 1;
    }
    let top = *counts.values().max().expect("non-empty");
    let mut modal = counts.iter().filter(|(_, &c)| c == top).map(|(&v, _)| v);
    let value = modal.next().expect("at least one modal value");
    Ok(ModeSummary {
        value,
        count: top,
        multimodal: modal.next().is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRank {
    pub factor: String,
    pub mode_value: u32,
    pub mode_count: usize,
    pub multimodal: bool,
    pub mean: f64,
    pub final_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataQuality {
    pub participants: usize,
    /// 1-based rows that do not use each rank exactly once.
    pub non_permutation_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    /// One entry per factor, in survey column order.
    pub per_factor: Vec<FactorRank>,
    pub tie_breaks_applied: Vec<String>,
    pub data_quality: DataQuality,
}

impl RankingResult {
    pub fn get(&self, factor: &str) -> Option<&FactorRank> {
        self.per_factor
            .iter()
            .find(|f| f.factor.eq_ignore_ascii_case(factor))
    }

    /// Entries sorted by final rank.
    pub fn by_rank(&self) -> Vec<&FactorRank> {
        let mut v: Vec<_> = self.per_factor.iter().collect();
        v.sort_by_key(|f| f.final_rank);
        v
    }
}

fn name_cmp(a: &str, b: &str) -> Ordering {
    a.to_lowercase().cmp(&b.to_lowercase()).then_with(|| a.cmp(b))
}

/// Orders factors by (mode, mean, name) and assigns ranks 1..n.
pub fn rank_factors(survey: &SurveyMatrix) -> Result<RankingResult> {
    if survey.participants() == 0 {
        return Err(Error::Param("survey has no participants".into()));
    }
    struct Entry {
        factor: String,
        mode: ModeSummary,
        sum: u64,
    }
    let p = survey.participants();
    let mut entries = survey
        .factors()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let column = survey.column(c);
            Ok(Entry {
                factor: name.clone(),
                mode: mode_of(&column)?,
                sum: column.iter().map(|&v| v as u64).sum(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Integer sums over the same participant count order exactly like means.
    entries.sort_by(|a, b| {
        a.mode
            .value
            .cmp(&b.mode.value)
            .then(a.sum.cmp(&b.sum))
            .then_with(|| name_cmp(&a.factor, &b.factor))
    });

    let mean = |sum: u64| sum as f64 / p as f64;
    let mut tie_breaks = Vec::new();
    for pair in entries.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.mode.value != b.mode.value {
            continue;
        }
        if a.sum != b.sum {
            tie_breaks.push(format!(
                "'{}' before '{}': both have mode {}, mean {:.4} < {:.4}",
                a.factor,
                b.factor,
                a.mode.value,
                mean(a.sum),
                mean(b.sum)
            ));
        } else {
            tie_breaks.push(format!(
                "'{}' before '{}': both have mode {} and mean {:.4}, ordered by name",
                a.factor,
                b.factor,
                a.mode.value,
                mean(a.sum)
            ));
        }
    }

    let mut ranks: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        ranks.insert(e.factor.as_str(), i + 1);
    }
    let per_factor = survey
        .factors()
        .iter()
        .map(|f| {
            let e = entries.iter().find(|e| &e.factor == f).expect("every factor ranked");
            FactorRank {
                factor: f.clone(),
                mode_value: e.mode.value,
                mode_count: e.mode.count,
                multimodal: e.mode.multimodal,
                mean: mean(e.sum),
                final_rank: ranks[f.as_str()],
            }
        })
        .collect();

    Ok(RankingResult {
        per_factor,
        tie_breaks_applied: tie_breaks,
        data_quality: DataQuality {
            participants: p,
            non_permutation_rows: survey.non_permutation_rows(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorStats {
    pub factor: String,
    #[serde(flatten)]
    pub stats: Descriptive,
}

/// Descriptive statistics per factor, ordered alphabetically by factor name.
pub fn describe_factors(survey: &SurveyMatrix) -> Result<Vec<FactorStats>> {
    let mut out = survey
        .factors()
        .iter()
        .enumerate()
        .map(|(c, f)| {
            let column: Vec<f64> = survey.column(c).into_iter().map(f64::from).collect();
            Ok(FactorStats {
                factor: f.clone(),
                stats: descriptive(&column)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| name_cmp(&a.factor, &b.factor));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i:02}")).collect()
    }

    #[test]
    fn mode_examples() {
        assert_eq!(mode_of(&[1, 1, 2]).unwrap(), ModeSummary { value: 1, count: 2, multimodal: false });
        assert_eq!(mode_of(&[2, 1]).unwrap(), ModeSummary { value: 1, count: 1, multimodal: true });
        assert_eq!(mode_of(&[5, 5, 5]).unwrap(), ModeSummary { value: 5, count: 3, multimodal: false });
        assert!(mode_of(&[]).is_err());
    }

    #[test]
    fn single_participant_permutation() {
        let row: Vec<u32> = vec![3, 1, 5, 2, 4];
        let survey = SurveyMatrix::new(names(5), vec![row.clone()]).unwrap();
        let r = rank_factors(&survey).unwrap();
        for (f, expected) in r.per_factor.iter().zip(&row) {
            assert_eq!(f.final_rank as u32, *expected);
        }
        assert!(r.tie_breaks_applied.is_empty());
        assert!(r.data_quality.non_permutation_rows.is_empty());
    }

    #[test]
    fn identical_columns_ordered_by_name() {
        let factors = vec!["Zeta".to_string(), "alpha".to_string(), "Mid".to_string()];
        let rows = vec![vec![2, 2, 1], vec![2, 2, 3], vec![3, 3, 1]];
        let survey = SurveyMatrix::new(factors, rows).unwrap();
        let r = rank_factors(&survey).unwrap();
        assert_eq!(r.get("Mid").unwrap().final_rank, 1);
        assert_eq!(r.get("alpha").unwrap().final_rank, 2);
        assert_eq!(r.get("Zeta").unwrap().final_rank, 3);
        assert_eq!(r.tie_breaks_applied.len(), 1);
        assert!(r.tie_breaks_applied[0].contains("ordered by name"));
        assert_eq!(r.data_quality.non_permutation_rows, vec![1, 2, 3]);
    }

    #[test]
    fn mean_breaks_mode_ties() {
        let rows = vec![vec![1, 1], vec![1, 1], vec![2, 9]];
        let survey = SurveyMatrix::new(names(2), rows).unwrap();
        let r = rank_factors(&survey).unwrap();
        assert_eq!(r.get("f00").unwrap().final_rank, 1);
        assert!(r.tie_breaks_applied[0].contains("mean"));
    }

    #[test]
    fn rejects_out_of_scale() {
        let err = SurveyMatrix::new(names(2), vec![vec![1, 26]]).unwrap_err();
        assert!(matches!(err, Error::Range { row: 1, value: 26, .. }), "{err}");
        assert!(SurveyMatrix::new(names(2), vec![vec![0, 1]]).is_err());
        assert!(SurveyMatrix::new(names(2), vec![vec![1]]).is_err());
        assert!(SurveyMatrix::new(vec!["A".into(), "a".into()], vec![]).is_err());
    }

    #[test]
    fn describe_orders_by_name() {
        let factors = vec!["b".to_string(), "A".to_string()];
        let survey = SurveyMatrix::new(factors, vec![vec![1, 4], vec![3, 4]]).unwrap();
        let d = describe_factors(&survey).unwrap();
        assert_eq!(d[0].factor, "A");
        assert_eq!(d[0].stats.std, 0.0);
        assert_eq!(d[1].stats.mean, 2.0);
    }

    fn survey_strategy() -> impl Strategy<Value = SurveyMatrix> {
        (2usize..8, 1usize..30).prop_flat_map(|(f, p)| {
            prop::collection::vec(prop::collection::vec(1u32..=25, f), p)
                .prop_map(move |rows| SurveyMatrix::new(names(f), rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn ranks_form_a_permutation(survey in survey_strategy()) {
            let r = rank_factors(&survey).unwrap();
            let mut ranks: Vec<usize> = r.per_factor.iter().map(|f| f.final_rank).collect();
            ranks.sort_unstable();
            prop_assert!(ranks.into_iter().eq(1..=survey.factors().len()));
        }

        #[test]
        fn row_order_irrelevant(survey in survey_strategy()) {
            let mut rows = survey.responses().to_vec();
            rows.reverse();
            let half = rows.len() / 2;
            rows.rotate_left(half);
            let shuffled = SurveyMatrix::new(survey.factors().to_vec(), rows).unwrap();
            let mut a = rank_factors(&survey).unwrap();
            let mut b = rank_factors(&shuffled).unwrap();
            a.data_quality.non_permutation_rows.clear();
            b.data_quality.non_permutation_rows.clear();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn duplicating_rows_keeps_modes_and_ranks(survey in survey_strategy()) {
            let mut rows = survey.responses().to_vec();
            rows.extend_from_slice(survey.responses());
            let doubled = SurveyMatrix::new(survey.factors().to_vec(), rows).unwrap();
            let a = rank_factors(&survey).unwrap();
            let b = rank_factors(&doubled).unwrap();
            for (x, y) in a.per_factor.iter().zip(&b.per_factor) {
                prop_assert_eq!(x.mode_value, y.mode_value);
                prop_assert_eq!(x.final_rank, y.final_rank);
            }
        }
    }
}
