//! Experiment harnesses: detector-parity readout, singlet no-signaling,
//! coupled-eraser cross terms and the bare collapse walk.
//!
//! Trials are independent; each owns an rng substream keyed by its index.
//! Results are gathered in trial order and reduced sequentially, so reports
//! do not depend on the number of worker threads.

pub mod bell;
pub mod emzi;
pub mod epr;
pub mod walk;

use rayon::prelude::*;
use thiserror::Error;

use crate::collapse::CollapseError;
use crate::state::StateError;
use crate::stats::StatsError;

pub use bell::{run_bell_parity, BellParityReport, BellTrial};
pub use emzi::{emzi_alternative_cross_fraction, emzi_analytic_cross_fraction, run_emzi_mc, EmziBranchState, EmziChannel, EmziReport};
pub use epr::{compare_no_signaling, run_epr_no_signaling, EprReport, NoSignalingReport};
pub use walk::{expected_collapse_steps, rms_mass_deviation, run_walk_experiment, WalkReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Collapse(#[from] CollapseError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Worker-count policy for trial loops. `None` uses rayon's global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Executor {
    pub workers: Option<usize>,
}

impl Executor {
    pub fn with_workers(workers: usize) -> Self {
        Executor {
            workers: Some(workers.max(1)),
        }
    }

    /// Runs `trial` for every index in `0..trials`, returning results in
    /// index order.
    pub fn run<T, F>(&self, trials: u64, trial: F) -> Result<Vec<T>, ExperimentError>
    where
        T: Send,
        F: Fn(u64) -> Result<T, ExperimentError> + Sync + Send,
    {
        match self.workers {
            Some(1) => (0..trials).map(&trial).collect(),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| ExperimentError::Pool(e.to_string()))?;
                pool.install(|| (0..trials).into_par_iter().map(&trial).collect())
            }
            None => (0..trials).into_par_iter().map(&trial).collect(),
        }
    }
}

pub(crate) fn require_trials(trials: u64) -> Result<(), ExperimentError> {
    if trials == 0 || trials > crate::rng::MAX_TRIAL_INDEX {
        return Err(ExperimentError::InvalidParameter(format!(
            "trials must be in [1, 2^56), got {trials}"
        )));
    }
    Ok(())
}
