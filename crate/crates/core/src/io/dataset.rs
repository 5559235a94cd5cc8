//! Dataset manifests stored as JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{Dataset, DatasetManifest};
use crate::error::{Error, Result};

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        Error::parse(
            format!("{} line {} column {}", path.display(), e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Loads a manifest and rejects it if [`crate::validate_dataset`] finds any violation.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::try_from(load_manifest(path)?)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &dataset.to_manifest()).expect("manifest serializes");
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        save_dataset(&Dataset::reference(), &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), Dataset::reference());
    }

    #[test]
    fn invalid_manifest_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"items":[{"id":"a","text":"A","gold":"ergonomic"}]}"#).unwrap();
        assert!(load_manifest(&path).is_ok());
        assert!(matches!(load_dataset(&path), Err(Error::Schema { .. })));

        std::fs::write(&path, "{\"items\": [").unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Parse { .. })));
        assert!(matches!(load_dataset(dir.path().join("missing.json")), Err(Error::Io { .. })));
    }
}
