use serde::{Deserialize, Serialize};

use crate::collapse::{CollapseConfig, SequencingMode};
use crate::experiments::bell::BellParityReport;
use crate::experiments::emzi::{emzi_alternative_cross_fraction, emzi_analytic_cross_fraction, EmziBranchState, EmziReport};
use crate::experiments::epr::{singlet_state, NoSignalingReport, DEFAULT_CHAIN_LEN};
use crate::experiments::walk::WalkReport;
use crate::experiments::ExperimentError;
use crate::state::DEFAULT_MAX_PARTICLES;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_DETECTORS: usize = 10;

pub fn tool_version() -> String {
    format!("collapse-lab {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BellParity,
    Epr,
    Emzi,
    Walk,
    EmziAnalytic,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BellParity => "bell-parity",
            Experiment::Epr => "epr",
            Experiment::Emzi => "emzi",
            Experiment::Walk => "walk",
            Experiment::EmziAnalytic => "emzi-analytic",
        }
    }
}

/// Experiment parameters. Absent entries take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParameters {
    /// Detector count for `bell-parity`, chain length for `epr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_branch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default)]
    pub sequencing_mode: SequencingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub parameters: RunParameters,
    pub master_seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    /// New manifest stamped with the current UTC time.
    pub fn new(experiment: Experiment, parameters: RunParameters, master_seed: u64) -> Self {
        RunManifest {
            experiment,
            parameters,
            master_seed,
            tool_version: tool_version(),
            timestamp: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        }
    }

    pub fn trials(&self) -> u64 {
        self.parameters.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn delta(&self) -> f64 {
        self.parameters.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn n(&self) -> usize {
        self.parameters.n.unwrap_or(match self.experiment {
            Experiment::Epr => DEFAULT_CHAIN_LEN,
            _ => DEFAULT_DETECTORS,
        })
    }

    pub fn collapse_config(&self) -> Result<CollapseConfig, ExperimentError> {
        Ok(CollapseConfig::new(self.delta())?
            .with_seed(self.master_seed)
            .with_sequencing(self.parameters.sequencing_mode))
    }

    fn require<T: Copy>(value: Option<T>, name: &str) -> Result<T, ManifestError> {
        value.ok_or_else(|| ManifestError::Missing(name.to_string()))
    }

    /// Checks that required parameters are present and every value is in range.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let p = &self.parameters;
        if self.experiment == Experiment::EmziAnalytic {
            let r = Self::require(p.r_branch, "r-branch")?;
            emzi_analytic_cross_fraction(r)?;
            return Ok(());
        }
        let config = self.collapse_config()?;
        let trials = self.trials();
        if trials == 0 || trials > crate::rng::MAX_TRIAL_INDEX {
            return Err(ExperimentError::InvalidParameter(format!("trials must be positive, got {trials}")).into());
        }
        match self.experiment {
            Experiment::BellParity => {
                let n = self.n();
                if n == 0 || n + 1 > DEFAULT_MAX_PARTICLES {
                    return Err(
                        ExperimentError::InvalidParameter(format!("n must be in [1, {}], got {n}", DEFAULT_MAX_PARTICLES - 1)).into(),
                    );
                }
            }
            Experiment::Epr => {
                singlet_state(self.n())?;
            }
            Experiment::Emzi => {
                let r = Self::require(p.r_branch, "r-branch")?;
                emzi_analytic_cross_fraction(r)?;
                EmziBranchState::prepare(r, config.delta_ave())?;
            }
            Experiment::Walk => {
                let p0 = Self::require(p.p0, "p0")?;
                if !(p0 > 0.0 && p0 < 1.0) {
                    return Err(ExperimentError::InvalidParameter(format!("p0 must lie in (0, 1), got {p0}")).into());
                }
            }
            Experiment::EmziAnalytic => unreachable!(),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifestError {
    #[error("missing required parameter --{0}")]
    Missing(String),
    #[error(transparent)]
    Domain(#[from] ExperimentError),
}

impl From<crate::collapse::CollapseError> for ManifestError {
    fn from(e: crate::collapse::CollapseError) -> Self {
        ManifestError::Domain(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmziAnalyticReport {
    pub r_branch: f64,
    pub cross_fraction: f64,
    pub alternative_cross_fraction: f64,
}

impl EmziAnalyticReport {
    pub fn new(r_branch: f64) -> Result<Self, ExperimentError> {
        Ok(EmziAnalyticReport {
            r_branch,
            cross_fraction: emzi_analytic_cross_fraction(r_branch)?,
            alternative_cross_fraction: emzi_alternative_cross_fraction(r_branch)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Report {
    BellParity(BellParityReport),
    Epr(NoSignalingReport),
    Emzi(EmziReport),
    Walk(WalkReport),
    EmziAnalytic(EmziAnalyticReport),
}

/// Summary document: the manifest that produced a run and its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub manifest: RunManifest,
    pub report: Report,
}
