//! Singlet pair with an optional interaction chain on the `a` side.
//!
//! Register layout: particle 0 is `a`, particle 1 is `b`, particles
//! `2..2 + chain_len` are detectors that interact with `a`.

use serde::{Deserialize, Serialize};

use super::{require_trials, Executor, ExperimentError};
use crate::collapse::{interleaved_evolution, BranchPredicate, CollapseConfig, Interaction, ScheduleEntry};
use crate::rng::TrialRng;
use crate::state::{Basis, PureState, DEFAULT_MAX_PARTICLES};
use crate::stats::tv_distance;
use num_complex::Complex64;

pub const EPR_ARM_UNMEASURED: u8 = 1;
pub const EPR_ARM_MEASURED: u8 = 2;
pub const DEFAULT_CHAIN_LEN: usize = 8;

/// `(|x_a up>|x_b down> - |x_a down>|x_b up>)/sqrt2` with `chain_len`
/// detectors in `|x down>`.
pub fn singlet_state(chain_len: usize) -> Result<PureState, ExperimentError> {
    let n = chain_len + 2;
    if n > DEFAULT_MAX_PARTICLES {
        return Err(ExperimentError::InvalidParameter(format!(
            "chain length {chain_len} exceeds register capacity"
        )));
    }
    let detectors_down = ((1usize << n) - 1) & !0b11;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
    amplitudes[detectors_down | 0b10] = Complex64::new(h, 0.0);
    amplitudes[detectors_down | 0b01] = Complex64::new(-h, 0.0);
    Ok(PureState::from_amplitudes(amplitudes, vec![Basis::X; n])?)
}

/// Detectors `2..2 + chain_len` each flip when `a` is x-up.
pub fn a_side_chain(chain_len: usize) -> Vec<ScheduleEntry> {
    (2..2 + chain_len)
        .map(|d| ScheduleEntry::new(Interaction::ControlledFlip { detector: d }, BranchPredicate::ParticleUp(0)))
        .collect()
}

/// Exact x-basis marginal of `b`, ordered `[up, down]`.
pub fn b_marginal_exact(state: &PureState) -> [f64; 2] {
    let mut m = [0.0; 2];
    for (i, p) in state.born_probabilities().into_iter().enumerate() {
        m[i >> 1 & 1] += p;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprTrial {
    pub trial_index: u64,
    pub outcome: usize,
    pub a_up: bool,
    pub b_up: bool,
    pub steps_to_absorption: Option<u64>,
    pub s_history_length: u64,
}

pub fn epr_trial(config: &CollapseConfig, measure_side_a: bool, chain_len: usize, trial_index: u64) -> Result<EprTrial, ExperimentError> {
    let arm = if measure_side_a { EPR_ARM_MEASURED } else { EPR_ARM_UNMEASURED };
    let mut rng = TrialRng::for_trial(config.master_seed, arm, trial_index);
    let state = singlet_state(chain_len)?;
    let (state, steps_to_absorption, s_len) = if measure_side_a {
        let evo = interleaved_evolution(state, &a_side_chain(chain_len), config, &mut rng)?;
        let absorbed = evo.absorbed_at().map(|i| i as u64 + 1);
        let len = evo.steps.len() as u64;
        (evo.state, absorbed, len)
    } else {
        (state, None, 0)
    };
    let outcome = state.sample_outcome(rng.uniform());
    Ok(EprTrial {
        trial_index,
        outcome,
        a_up: outcome & 1 == 0,
        b_up: outcome & 0b10 == 0,
        steps_to_absorption,
        s_history_length: s_len,
    })
}

pub fn epr_trials(
    trials: u64,
    config: &CollapseConfig,
    measure_side_a: bool,
    chain_len: usize,
    exec: &Executor,
) -> Result<Vec<EprTrial>, ExperimentError> {
    require_trials(trials)?;
    singlet_state(chain_len)?;
    exec.run(trials, |i| epr_trial(config, measure_side_a, chain_len, i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub trials: u64,
    pub measure_side_a: bool,
    pub chain_len: usize,
    pub b_up: u64,
    pub b_down: u64,
    /// Empirical `[up, down]` frequencies of `b` in the x basis.
    pub marginal_b: [f64; 2],
    /// Trials where `b` came out opposite to `a`.
    pub anticorrelated: u64,
    pub absorbed_trials: u64,
}

pub fn summarize_epr(measure_side_a: bool, chain_len: usize, trials: &[EprTrial]) -> EprReport {
    let m = trials.len() as u64;
    let b_up = trials.iter().filter(|t| t.b_up).count() as u64;
    EprReport {
        trials: m,
        measure_side_a,
        chain_len,
        b_up,
        b_down: m - b_up,
        marginal_b: [b_up as f64 / m as f64, (m - b_up) as f64 / m as f64],
        anticorrelated: trials.iter().filter(|t| t.a_up != t.b_up).count() as u64,
        absorbed_trials: trials.iter().filter(|t| t.steps_to_absorption.is_some()).count() as u64,
    }
}

pub fn run_epr_no_signaling(
    trials: u64,
    config: &CollapseConfig,
    measure_side_a: bool,
    chain_len: usize,
    exec: &Executor,
) -> Result<EprReport, ExperimentError> {
    let records = epr_trials(trials, config, measure_side_a, chain_len, exec)?;
    Ok(summarize_epr(measure_side_a, chain_len, &records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    pub unmeasured: EprReport,
    pub measured: EprReport,
    pub tv_distance: f64,
    /// `4 / sqrt(trials)`.
    pub threshold: f64,
}

impl NoSignalingReport {
    pub fn from_arms(unmeasured: EprReport, measured: EprReport) -> Result<Self, ExperimentError> {
        let tv = tv_distance(&unmeasured.marginal_b, &measured.marginal_b)?;
        let threshold = 4.0 / (unmeasured.trials.min(measured.trials) as f64).sqrt();
        Ok(NoSignalingReport {
            unmeasured,
            measured,
            tv_distance: tv,
            threshold,
        })
    }

    pub fn passes(&self) -> bool {
        self.tv_distance < self.threshold
    }
}

/// Runs both arms and compares the `b` marginals.
pub fn compare_no_signaling(
    trials: u64,
    config: &CollapseConfig,
    chain_len: usize,
    exec: &Executor,
) -> Result<NoSignalingReport, ExperimentError> {
    let unmeasured = run_epr_no_signaling(trials, config, false, chain_len, exec)?;
    let measured = run_epr_no_signaling(trials, config, true, chain_len, exec)?;
    NoSignalingReport::from_arms(unmeasured, measured)
}
