#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riskrank_core::io::{save_fixture, write_survey};
use riskrank_core::synthetic::{synthetic_embeddings, synthetic_survey};
use riskrank_core::{Dataset, REFERENCE_FACTORS};

pub const BIN: &str = env!("CARGO_BIN_EXE_riskrank");

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    /// Synthetic BERT-like and sentence-transformer-like fixtures, a survey
    /// and an experiment config referencing them.
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::reference();
        save_fixture(&synthetic_embeddings(&ds, "synthetic-bert", 48, 2.5, 1).unwrap(), "t0", dir.path().join("bert.jsonl")).unwrap();
        save_fixture(&synthetic_embeddings(&ds, "synthetic-st", 32, 0.6, 2).unwrap(), "t0", dir.path().join("st.jsonl")).unwrap();
        let names: Vec<String> = REFERENCE_FACTORS.iter().map(|f| f.survey_name.to_string()).collect();
        let mut csv = Vec::new();
        write_survey(&synthetic_survey(&names, 200, 3).unwrap(), &mut csv).unwrap();
        fs::write(dir.path().join("survey.csv"), csv).unwrap();
        fs::write(
            dir.path().join("experiment.toml"),
            "bert_fixture = \"bert.jsonl\"\nst_fixture = \"st.jsonl\"\nsurvey = \"survey.csv\"\noutput_dir = \"out\"\n",
        )
        .unwrap();
        Workspace { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN).args(args).env_remove("RISKRANK_CONFIG").output().unwrap()
}

pub fn run_in<I, S>(dir: &Path, args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN).current_dir(dir).args(args).env_remove("RISKRANK_CONFIG").output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}
