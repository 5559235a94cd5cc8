//! Survey CSV ingestion.
//!
//! The header row names the factors; each following row is one participant.
//! Header names are matched to the 25 canonical factors case-insensitively,
//! ignoring punctuation and whitespace, and the canonical spelling is used
//! from then on.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::data::REFERENCE_FACTORS;
use crate::error::{Error, Result};
use crate::ranking::{SurveyMatrix, SCALE_MAX, SCALE_MIN};

#[derive(Debug, Clone, Default)]
pub struct SurveyOptions {
    /// Drop columns whose header is not a known factor instead of failing.
    pub skip_unknown_columns: bool,
}

fn match_key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Canonical factor name for a header cell, if it is one of the 25 factors.
pub fn canonical_factor(header: &str) -> Option<&'static str> {
    static EXTRA_ALIASES: [(&str, &str); 4] = [
        ("lifestyles", "Lifestyle"),
        ("deviation", "Deviation from neutral body alignment"),
        ("pooremployeefacility", "Poor employee facility"),
        ("deviationfromneutralbodyposture", "Deviation from neutral body alignment"),
    ];
    let key = match_key(header);
    REFERENCE_FACTORS
        .iter()
        .find(|f| match_key(f.survey_name) == key || match_key(f.phrase) == key || f.id.replace('_', "") == key)
        .map(|f| f.survey_name)
        .or_else(|| {
            EXTRA_ALIASES
                .iter()
                .find(|(alias, _)| *alias == key)
                .map(|(_, name)| *name)
        })
}

pub fn read_survey(reader: impl Read, options: &SurveyOptions) -> Result<SurveyMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();

    let mut columns: Vec<(usize, &'static str)> = Vec::new();
    let mut used: HashMap<&'static str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        match canonical_factor(h) {
            Some(name) => {
                if let Some(prev) = used.insert(name, i) {
                    return Err(Error::schema(
                        "header",
                        format!("columns {} and {} both map to factor '{name}'", prev + 1, i + 1),
                    ));
                }
                columns.push((i, name));
            }
            None if options.skip_unknown_columns => {
                log::warn!("skipping unknown survey column '{h}'");
            }
            None => {
                return Err(Error::schema("header", format!("unknown factor name '{h}'")));
            }
        }
    }
    let missing: Vec<&str> = REFERENCE_FACTORS
        .iter()
        .map(|f| f.survey_name)
        .filter(|n| !used.contains_key(n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::schema("header", format!("missing factor column(s): {}", missing.join(", "))));
    }

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| Error::parse(format!("row {row_no}"), e.to_string()))?;
        let mut row = Vec::with_capacity(columns.len());
        for &(i, name) in &columns {
            let cell = record.get(i).ok_or_else(|| {
                Error::parse(format!("row {row_no}, column '{name}'"), "missing cell")
            })?;
            let value: i64 = cell.parse().map_err(|_| {
                Error::parse(format!("row {row_no}, column '{name}'"), format!("'{cell}' is not an integer"))
            })?;
            if value < SCALE_MIN as i64 || value > SCALE_MAX as i64 {
                return Err(Error::Range {
                    row: row_no,
                    column: name.to_string(),
                    value,
                    min: SCALE_MIN as i64,
                    max: SCALE_MAX as i64,
                });
            }
            row.push(value as u32);
        }
        rows.push(row);
    }
    SurveyMatrix::new(columns.iter().map(|(_, n)| n.to_string()).collect(), rows)
}

pub fn load_survey(path: impl AsRef<Path>) -> Result<SurveyMatrix> {
    load_survey_with(path, &SurveyOptions::default())
}

pub fn load_survey_with(path: impl AsRef<Path>, options: &SurveyOptions) -> Result<SurveyMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_survey(file, options)
}

/// Writes a survey in the CSV layout accepted by [`read_survey`].
pub fn write_survey(survey: &SurveyMatrix, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::parse("csv output", e.to_string());
    w.write_record(survey.factors()).map_err(err)?;
    for row in survey.responses() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<survey>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header() -> String {
        REFERENCE_FACTORS
            .iter()
            .map(|f| format!("\"{}\"", f.phrase))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn row(values: &[String]) -> String {
        values.join(",")
    }

    fn valid_row() -> Vec<String> {
        (1..=25).map(|v| v.to_string()).collect()
    }

    #[test]
    fn canonical_matching() {
        assert_eq!(canonical_factor("WORKING POSTURE"), Some("Working posture"));
        assert_eq!(canonical_factor(" Life Style "), Some("Lifestyle"));
        assert_eq!(canonical_factor("Effort-Reward Imbalance"), Some("Effort reward imbalance"));
        assert_eq!(canonical_factor("Insufficient breaks"), Some("Insufficient break"));
        assert_eq!(canonical_factor("Poor Employee Facilities"), Some("Poor employee facility"));
        assert_eq!(canonical_factor("Deviation"), Some("Deviation from neutral body alignment"));
        assert_eq!(canonical_factor("Participant"), None);
    }

    #[test]
    fn reads_valid_survey() {
        let body = format!("{}\n{}\n{}\n", header(), row(&valid_row()), row(&valid_row()));
        let s = read_survey(body.as_bytes(), &SurveyOptions::default()).unwrap();
        assert_eq!(s.participants(), 2);
        assert_eq!(s.factors().len(), 25);
        assert_eq!(s.factors()[0], "Age");
        assert_eq!(s.factors()[15], "Insufficient break");
    }

    #[test]
    fn range_and_parse_errors() {
        let mut bad = valid_row();
        bad[3] = "26".into();
        let body = format!("{}\n{}\n", header(), row(&bad));
        let err = read_survey(body.as_bytes(), &SurveyOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Range { row: 1, value: 26, column, .. } if column == "Lifestyle"), "{err}");

        bad[3] = "3.5".into();
        let body = format!("{}\n{}\n", header(), row(&bad));
        assert!(matches!(read_survey(body.as_bytes(), &SurveyOptions::default()), Err(Error::Parse { .. })));

        bad[3] = "".into();
        let body = format!("{}\n{}\n", header(), row(&bad));
        assert!(matches!(read_survey(body.as_bytes(), &SurveyOptions::default()), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_and_missing_columns() {
        let body = format!("Id,{}\n0,{}\n", header(), row(&valid_row()));
        assert!(matches!(read_survey(body.as_bytes(), &SurveyOptions::default()), Err(Error::Schema { .. })));
        let lenient = SurveyOptions { skip_unknown_columns: true };
        assert_eq!(read_survey(body.as_bytes(), &lenient).unwrap().factors().len(), 25);

        let body = "Age,Gender\n1,2\n";
        assert!(matches!(read_survey(body.as_bytes(), &SurveyOptions::default()), Err(Error::Schema { .. })));
    }

    #[test]
    fn column_order_follows_header() {
        let mut names: Vec<&str> = REFERENCE_FACTORS.iter().map(|f| f.survey_name).collect();
        names.reverse();
        let body = format!("{}\n{}\n", names.join(","), row(&valid_row()));
        let s = read_survey(body.as_bytes(), &SurveyOptions::default()).unwrap();
        assert_eq!(s.factors()[0], "Deviation from neutral body alignment");
        assert_eq!(s.column(0), vec![1]);
    }

    proptest! {
        #[test]
        fn accepts_exactly_in_range_cells(cells in prop::collection::vec(-3i64..30, 25)) {
            let body = format!("{}\n{}\n", header(), cells.iter().map(i64::to_string).collect::<Vec<_>>().join(","));
            let result = read_survey(body.as_bytes(), &SurveyOptions::default());
            let in_range = cells.iter().all(|&v| (1..=25).contains(&v));
            prop_assert_eq!(result.is_ok(), in_range);
            if !in_range {
                let is_range_error = matches!(result, Err(Error::Range { .. }));
                prop_assert!(is_range_error);
            }
        }
    }
}
