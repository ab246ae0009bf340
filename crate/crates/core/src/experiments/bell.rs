//! Subject plus `N` detectors, correlated in the x basis and read out in z.
//!
//! Without collapse the z readout shows subject up only with an even number
//! of detector downs, and subject down only with an odd number. Any other
//! combination is the collapse signature.

use serde::{Deserialize, Serialize};

use super::{require_trials, Executor, ExperimentError};
use crate::collapse::{interleaved_evolution, BranchPredicate, CollapseConfig, Evolution, Interaction, ScheduleEntry, SequencingMode};
use crate::rng::TrialRng;
use crate::state::{make_initial_state, parity_classify, Basis, Parity, PureState, DEFAULT_MAX_PARTICLES};
use crate::stats::{wilson_interval, DEFAULT_Z};

pub const BELL_ARM: u8 = 0;

/// One controlled flip per detector, each splitting off the subject-up branch.
pub fn bell_schedule(n_detectors: usize) -> Vec<ScheduleEntry> {
    (1..=n_detectors)
        .map(|d| ScheduleEntry::new(Interaction::ControlledFlip { detector: d }, BranchPredicate::ParticleUp(0)))
        .collect()
}

fn check_detectors(n_detectors: usize) -> Result<(), ExperimentError> {
    if n_detectors == 0 || n_detectors + 1 > DEFAULT_MAX_PARTICLES {
        return Err(ExperimentError::InvalidParameter(format!(
            "n_detectors must be in [1, {}], got {n_detectors}",
            DEFAULT_MAX_PARTICLES - 1
        )));
    }
    Ok(())
}

/// Runs the correlating schedule with collapse steps and rotates every
/// particle to the z basis.
pub fn prepare_readout_state(n_detectors: usize, config: &CollapseConfig, rng: &mut TrialRng) -> Result<Evolution, ExperimentError> {
    check_detectors(n_detectors)?;
    let initial = make_initial_state(n_detectors)?;
    let mut evolution = interleaved_evolution(initial, &bell_schedule(n_detectors), config, rng)?;
    evolution.state.rotate_all_from(Basis::X)?;
    Ok(evolution)
}

/// Whether a z outcome agrees with continued superposition.
pub fn is_consistent(outcome: usize, n_detectors: usize) -> bool {
    let subject_up = outcome & 1 == 0;
    let parity = parity_classify(outcome, 1..n_detectors + 1);
    subject_up == (parity == Parity::Even)
}

/// Largest single-outcome probability and total probability over the
/// collapse-signature outcomes of a z-basis readout state.
pub fn signature_probability(state: &PureState, n_detectors: usize) -> (f64, f64) {
    state
        .born_probabilities()
        .iter()
        .enumerate()
        .filter(|(i, _)| !is_consistent(*i, n_detectors))
        .fold((0.0f64, 0.0f64), |(max, sum), (_, &p)| (max.max(p), sum + p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellTrial {
    pub trial_index: u64,
    pub outcome: usize,
    pub parity: Parity,
    pub q: i8,
    /// Number of collapse steps taken up to and including absorption.
    pub steps_to_absorption: Option<u64>,
    pub s_history_length: u64,
}

pub fn bell_trial(n_detectors: usize, config: &CollapseConfig, trial_index: u64) -> Result<BellTrial, ExperimentError> {
    let mut rng = TrialRng::for_trial(config.master_seed, BELL_ARM, trial_index);
    let evolution = prepare_readout_state(n_detectors, config, &mut rng)?;
    let outcome = evolution.state.sample_outcome(rng.uniform());
    Ok(BellTrial {
        trial_index,
        outcome,
        parity: parity_classify(outcome, 1..n_detectors + 1),
        q: if is_consistent(outcome, n_detectors) { 1 } else { -1 },
        steps_to_absorption: evolution.absorbed_at().map(|i| i as u64 + 1),
        s_history_length: evolution.steps.len() as u64,
    })
}

pub fn bell_trials(n_detectors: usize, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<Vec<BellTrial>, ExperimentError> {
    check_detectors(n_detectors)?;
    require_trials(trials)?;
    exec.run(trials, |i| bell_trial(n_detectors, config, i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellParityReport {
    pub n_detectors: usize,
    pub trials: u64,
    pub delta: f64,
    pub sequencing_mode: SequencingMode,
    pub count_consistent: u64,
    pub count_collapse_signature: u64,
    pub r_sup: f64,
    pub collapse_fraction: f64,
    /// Wilson interval on `r_sup`, mapped from the consistent proportion.
    pub confidence_interval: (f64, f64),
    pub absorbed_trials: u64,
}

pub fn summarize_bell(n_detectors: usize, config: &CollapseConfig, trials: &[BellTrial]) -> Result<BellParityReport, ExperimentError> {
    let m = trials.len() as u64;
    let consistent = trials.iter().filter(|t| t.q == 1).count() as u64;
    let signature = m - consistent;
    let (lo, hi) = wilson_interval(consistent, m, DEFAULT_Z)?;
    let r_sup = (consistent as f64 - signature as f64) / m as f64;
    Ok(BellParityReport {
        n_detectors,
        trials: m,
        delta: config.delta_ave(),
        sequencing_mode: config.sequencing_mode,
        count_consistent: consistent,
        count_collapse_signature: signature,
        r_sup,
        collapse_fraction: 1.0 - r_sup,
        confidence_interval: (2.0 * lo - 1.0, 2.0 * hi - 1.0),
        absorbed_trials: trials.iter().filter(|t| t.steps_to_absorption.is_some()).count() as u64,
    })
}

pub fn run_bell_parity(
    n_detectors: usize,
    trials: u64,
    config: &CollapseConfig,
    exec: &Executor,
) -> Result<BellParityReport, ExperimentError> {
    let records = bell_trials(n_detectors, trials, config, exec)?;
    summarize_bell(n_detectors, config, &records)
}
