use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use super::manifest::{Experiment, ManifestError, RunManifest, RunParameters};
use super::records::{read_summary, RecordFormat};
use crate::collapse::SequencingMode;

#[derive(Debug, Error)]
pub enum CliError {
    /// Help or version text; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Missing(_) => CliError::Usage(e.to_string()),
            ManifestError::Domain(_) => CliError::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Monte Carlo runs of the amplitude-transfer collapse model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detector-parity readout after an interaction chain.
    BellParity(RunArgs),
    /// Singlet b-marginal with and without an a-side chain.
    Epr(RunArgs),
    /// Coupled-eraser channel probabilities.
    Emzi(RunArgs),
    /// Closed-form coupled-eraser cross fraction.
    EmziAnalytic(RunArgs),
    /// Bare two-branch collapse walk.
    Walk(RunArgs),
    /// Re-run the manifest stored in a summary.json.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    /// Detector count (bell-parity) or chain length (epr).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    r_branch: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for summary.json and the record stream.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<RecordFormat>,
    /// Force every interaction onto a single sequence value.
    #[arg(long)]
    same_s: bool,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    summary: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<RecordFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    n: Option<usize>,
    trials: Option<u64>,
    delta: Option<f64>,
    r_branch: Option<f64>,
    p0: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<RecordFormat>,
    same_s: Option<bool>,
}

fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// A fully resolved command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub manifest: RunManifest,
    pub out: Option<PathBuf>,
    pub format: RecordFormat,
}

fn resolve(experiment: Experiment, args: RunArgs) -> Result<Invocation, CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let same_s = args.same_s || file.same_s.unwrap_or(false);
    let parameters = RunParameters {
        n: args.n.or(file.n),
        trials: args.trials.or(file.trials),
        delta: args.delta.or(file.delta),
        r_branch: args.r_branch.or(file.r_branch),
        p0: args.p0.or(file.p0),
        sequencing_mode: if same_s {
            SequencingMode::ForcedSameS
        } else {
            SequencingMode::DistinctS
        },
    };
    let manifest = RunManifest::new(experiment, parameters, args.seed.or(file.seed).unwrap_or(0));
    manifest.validate()?;
    Ok(Invocation {
        manifest,
        out: args.out.or(file.out),
        format: args.format.or(file.format).unwrap_or_default(),
    })
}

/// Parses `argv` (program name first) into an [`Invocation`].
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        let text = e.render().to_string();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(text),
            _ => CliError::Usage(text),
        }
    })?;
    match cli.command {
        Command::BellParity(a) => resolve(Experiment::BellParity, a),
        Command::Epr(a) => resolve(Experiment::Epr, a),
        Command::Emzi(a) => resolve(Experiment::Emzi, a),
        Command::EmziAnalytic(a) => resolve(Experiment::EmziAnalytic, a),
        Command::Walk(a) => resolve(Experiment::Walk, a),
        Command::Replay(a) => {
            let summary = read_summary(&a.summary).map_err(|e| CliError::Io(format!("{}: {e}", a.summary.display())))?;
            summary.manifest.validate()?;
            Ok(Invocation {
                manifest: summary.manifest,
                out: a.out,
                format: a.format.unwrap_or_default(),
            })
        }
    }
}
