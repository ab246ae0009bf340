//! Run manifests, command-line parsing and result files.

pub mod cli;
pub mod manifest;
pub mod records;
pub mod runner;

pub use cli::{parse_args, CliError, Invocation};
pub use manifest::{Experiment, Report, RunManifest, RunParameters, Summary};
pub use records::{write_results, RecordFormat, TrialRecordLine};
pub use runner::{run_manifest, workers_from_env, RunOutput};
