//! Persistent formats: embedding fixtures, dataset manifests, survey CSVs and
//! the remote embedding client.

mod dataset;
mod fixture;
mod remote;
mod survey;

pub use dataset::{load_dataset, load_manifest, save_dataset};
pub use fixture::{load_fixture, load_fixture_full, read_fixture, save_fixture, write_fixture, Fixture, FixtureHeader};
pub use remote::{fetch_embeddings, RemoteEmbedderConfig};
pub use survey::{canonical_factor, load_survey, load_survey_with, read_survey, write_survey, SurveyOptions};
