//! Line-oriented JSON embedding fixtures.
//!
//! Line 1 is a header object (`model_id`, `dim`, `normalized`, `created`,
//! optional `pooling`); every following non-blank line is one record
//! `{"id", "text", "vector"}`. Vector components are written with 17
//! significant digits so they read back bit-exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingRecord, EmbeddingSet, Vector, NORMALIZED_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureHeader {
    pub model_id: String,
    pub dim: usize,
    pub normalized: bool,
    pub created: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooling: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub header: FixtureHeader,
    pub set: EmbeddingSet,
    /// Problems that were tolerated while loading.
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    text: String,
    vector: Vec<f64>,
}

pub fn read_fixture(reader: impl BufRead) -> Result<Fixture> {
    let mut lines = reader.lines().enumerate();
    let header: FixtureHeader = loop {
        match lines.next() {
            None => return Err(Error::parse("line 1", "missing fixture header")),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::parse(format!("line {}", i + 1), e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| Error::parse(format!("line {}", i + 1), format!("bad header: {e}")))?;
            }
        }
    };
    if header.dim == 0 {
        return Err(Error::schema("header", "dim must be positive"));
    }

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines {
        let location = format!("line {}", i + 1);
        let line = line.map_err(|e| Error::parse(location.clone(), e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(location.clone(), e.to_string()))?;
        if raw.vector.len() != header.dim {
            return Err(Error::schema(
                format!("{location} (record '{}')", raw.id),
                format!("vector length {} != dim {}", raw.vector.len(), header.dim),
            ));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::schema(location, format!("duplicate id '{}'", raw.id)));
        }
        let vector = Vector::new(raw.vector).map_err(|e| Error::parse(location, e.to_string()))?;
        records.push(EmbeddingRecord {
            id: raw.id,
            text: raw.text,
            vector,
        });
    }

    if records.is_empty() {
        warnings.push("fixture has no records".to_string());
    }
    let all_unit = records
        .iter()
        .all(|r| (r.vector.norm() - 1.0).abs() <= NORMALIZED_TOLERANCE);
    let normalized = if records.is_empty() { header.normalized } else { all_unit };
    if normalized != header.normalized {
        warnings.push(format!(
            "header says normalized={} but vector norms say {}; using {}",
            header.normalized, normalized, normalized
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let set = EmbeddingSet::new(header.model_id.clone(), header.dim, normalized, records)?;
    Ok(Fixture {
        header,
        set,
        warnings,
    })
}

/// Loads and validates a fixture file.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    Ok(load_fixture_full(path)?.set)
}

pub fn load_fixture_full(path: impl AsRef<Path>) -> Result<Fixture> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_fixture(BufReader::new(file))
}

fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 24 + 2);
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:.16e}").expect("writing to a String");
    }
    out.push(']');
    out
}

pub fn write_fixture(set: &EmbeddingSet, created: &str, pooling: Option<&str>, mut out: impl Write) -> Result<()> {
    let header = FixtureHeader {
        model_id: set.model_id().to_string(),
        dim: set.dim(),
        normalized: set.is_normalized(),
        created: created.to_string(),
        pooling: pooling.map(str::to_string),
    };
    let io_err = |e: std::io::Error| Error::io("<fixture>", e);
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io_err)?;
    for r in set.records() {
        writeln!(
            out,
            "{{\"id\":{},\"text\":{},\"vector\":{}}}",
            serde_json::to_string(&r.id).expect("string serializes"),
            serde_json::to_string(&r.text).expect("string serializes"),
            format_vector(r.vector.as_slice())
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn save_fixture(set: &EmbeddingSet, created: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_fixture(set, created, None, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
