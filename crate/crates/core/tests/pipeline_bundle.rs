use std::fs;
use std::path::Path;

use riskrank_core::io::{save_fixture, write_survey};
use riskrank_core::pipeline::{BundleManifest, MANIFEST_FILE};
use riskrank_core::synthetic::{synthetic_embeddings, synthetic_survey};
use riskrank_core::{run_experiment, write_bundle, Dataset, ExperimentConfig, REFERENCE_FACTORS};

const MODEL_ORDER: [&str; 8] = [
    "bert_cosine",
    "nltk_jaccard",
    "st_cosine",
    "st_euclidean",
    "st_manhattan",
    "st_mahalanobis",
    "st_minkowski",
    "st_bray_curtis",
];

fn write_inputs(dir: &Path) -> ExperimentConfig {
    let ds = Dataset::reference();
    save_fixture(&synthetic_embeddings(&ds, "synthetic-bert", 48, 2.5, 1).unwrap(), "t0", dir.join("bert.jsonl")).unwrap();
    save_fixture(&synthetic_embeddings(&ds, "synthetic-st", 32, 0.6, 2).unwrap(), "t0", dir.join("st.jsonl")).unwrap();
    let names: Vec<String> = REFERENCE_FACTORS.iter().map(|f| f.survey_name.to_string()).collect();
    let mut csv = Vec::new();
    write_survey(&synthetic_survey(&names, 120, 3).unwrap(), &mut csv).unwrap();
    fs::write(dir.join("survey.csv"), csv).unwrap();
    fs::write(
        dir.join("experiment.toml"),
        "bert_fixture = \"bert.jsonl\"\nst_fixture = \"st.jsonl\"\nsurvey = \"survey.csv\"\n\n[cv]\nk = 10\nseed = 42\n",
    )
    .unwrap();
    ExperimentConfig::load(dir.join("experiment.toml")).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn experiment_covers_every_model_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let bundle = run_experiment(&config).unwrap();
    let names: Vec<&str> = bundle.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, MODEL_ORDER);
    assert_eq!(bundle.cv.len(), 8);
    assert_eq!(bundle.comparisons.len(), 8 * 7 / 2);
    assert_eq!(bundle.macro_table.len(), 8);
    assert_eq!(bundle.seed, 42);
    assert!(bundle.ranking.is_some() && bundle.descriptive.is_some());
    assert_eq!(bundle.model("nltk_jaccard").unwrap().report.accuracy, 0.2);
    for m in &bundle.models {
        assert_eq!(m.predictions.len(), 25);
        assert_eq!(m.confusion.total(), 25);
    }
    for cv in &bundle.cv {
        assert_eq!(cv.fold_accuracies.len(), 10);
    }
}

#[test]
fn bundles_are_byte_identical_apart_from_the_manifest_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ma = write_bundle(&run_experiment(&config).unwrap(), &a, "2024-01-01T00:00:00Z").unwrap();
    let mb = write_bundle(&run_experiment(&config).unwrap(), &b, "2030-06-30T12:00:00Z").unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(BundleManifest { created: String::new(), ..ma }, BundleManifest { created: String::new(), ..mb });

    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na != MANIFEST_FILE {
            assert!(ca == cb, "{na} differs");
        }
    }
    assert!(fa.iter().any(|(n, _)| n == "ranking.csv"));
}

#[test]
fn config_hash_tracks_content_not_location() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    let c1 = write_inputs(one.path());
    let mut c2 = write_inputs(two.path());
    c2.output_dir = two.path().join("elsewhere");
    let h1 = run_experiment(&c1).unwrap().config_hash;
    assert_eq!(h1, run_experiment(&c2).unwrap().config_hash);

    c2.cv.seed = 43;
    assert_ne!(h1, run_experiment(&c2).unwrap().config_hash);

    let ds = Dataset::reference();
    save_fixture(&synthetic_embeddings(&ds, "synthetic-st", 32, 0.6, 99).unwrap(), "t0", two.path().join("st.jsonl")).unwrap();
    let c3 = write_inputs(one.path());
    let mut c3b = c3.clone();
    c3b.st_fixture = Some(two.path().join("st.jsonl"));
    assert_ne!(run_experiment(&c3).unwrap().config_hash, run_experiment(&c3b).unwrap().config_hash);
}

#[test]
fn missing_fixture_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = write_inputs(dir.path());
    config.st_fixture = Some(dir.path().join("absent.jsonl"));
    let err = run_experiment(&config).unwrap_err().to_string();
    assert!(err.contains("st_fixture"), "{err}");
}
