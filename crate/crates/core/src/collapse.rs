//! Stochastic amplitude transfer between an interacting and a noninteracting
//! branch.
//!
//! Each entangling interaction moves squared amplitude `±δ_eff` into the
//! interacting branch with equal probability, where
//! `δ_eff = min(δ, p, 1 - p)`. The branch mass is therefore a martingale
//! that is absorbed exactly at 0 or 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::TrialRng;
use crate::state::{Branch, BranchDecomposition, PureState, StateError};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollapseError {
    #[error("delta_ave must lie in (0, 0.5], got {0}")]
    InvalidDelta(f64),
    #[error("initial branch mass must lie strictly inside (0, 1), got {0}")]
    InvalidMass(f64),
    #[error("walk not absorbed within {budget} steps (mass {mass})")]
    StepBudgetExceeded { budget: u64, mass: f64 },
    #[error("every step shares one sequencing value, the walk can never move")]
    FrozenWalk,
    #[error(transparent)]
    State(#[from] StateError),
}

/// How the step is shortened when the branch mass is closer to an endpoint
/// than `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryPolicy {
    /// Symmetric step of `min(δ, p, 1 - p)`.
    #[default]
    ClampStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SequencingMode {
    /// Every interaction gets its own sequencing value.
    #[default]
    DistinctS,
    /// All interactions share one sequencing value, so no amplitude moves.
    ForcedSameS,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseConfig {
    delta_ave: f64,
    pub boundary_policy: BoundaryPolicy,
    pub master_seed: u64,
    pub sequencing_mode: SequencingMode,
    pub step_budget: u64,
}

impl CollapseConfig {
    pub fn new(delta_ave: f64) -> Result<Self, CollapseError> {
        if !(delta_ave > 0.0 && delta_ave <= 0.5) {
            return Err(CollapseError::InvalidDelta(delta_ave));
        }
        Ok(CollapseConfig {
            delta_ave,
            boundary_policy: BoundaryPolicy::ClampStep,
            master_seed: 0,
            sequencing_mode: SequencingMode::DistinctS,
            step_budget: DEFAULT_STEP_BUDGET,
        })
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_sequencing(mut self, mode: SequencingMode) -> Self {
        self.sequencing_mode = mode;
        self
    }

    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    pub fn delta_ave(&self) -> f64 {
        self.delta_ave
    }
}

/// Step actually taken from mass `p`.
pub fn effective_step(p: f64, delta: f64) -> f64 {
    delta.min(p).min(1.0 - p)
}

/// Relative tolerance, in units of the step, for landing on an endpoint.
///
/// Repeated `±δ` additions drift by a few ulps, so a walk that should reach
/// 1.0 after k steps can stop at 0.9999999999999999 instead.
pub const ENDPOINT_SNAP: f64 = 1e-9;

/// Mass after one transfer. Steps that reach an endpoint land on it exactly.
pub fn transfer(p: f64, delta: f64, raise: bool) -> f64 {
    let step = effective_step(p, delta);
    let tol = step * ENDPOINT_SNAP;
    if raise {
        if step >= 1.0 - p - tol {
            1.0
        } else {
            p + step
        }
    } else if step >= p - tol {
        0.0
    } else {
        p - step
    }
}

/// Global sequencing counter. Never decreases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceCounter {
    s: u64,
}

impl SequenceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> u64 {
        self.s
    }

    /// Moves to the next value and returns it.
    pub fn advance(&mut self) -> u64 {
        self.s += 1;
        self.s
    }
}

/// Sequencing value of one interaction, and whether a spacelike partner
/// shares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceStamp {
    pub s: u64,
    pub shared: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepOutcome {
    Moved {
        before: f64,
        after: f64,
    },
    /// Same-s step: the decomposition is trivial and nothing changes.
    Skipped {
        mass: f64,
    },
}

impl StepOutcome {
    pub fn mass_after(&self) -> f64 {
        match *self {
            StepOutcome::Moved { after, .. } => after,
            StepOutcome::Skipped { mass } => mass,
        }
    }
}

/// One amplitude transfer on a full state.
///
/// Amplitudes inside each branch are scaled by a common positive real factor,
/// so relative phases within a branch survive untouched. A branch driven to
/// zero mass is set to exact zeros.
pub fn collapse_step(
    state: &mut PureState,
    decomposition: &BranchDecomposition,
    config: &CollapseConfig,
    rng: &mut TrialRng,
    stamp: SequenceStamp,
) -> StepOutcome {
    let p = decomposition.mass_interacting();
    if stamp.shared || config.sequencing_mode == SequencingMode::ForcedSameS {
        return StepOutcome::Skipped { mass: p };
    }
    let after = transfer(p, config.delta_ave, rng.coin());
    let q = decomposition.mass_noninteracting();
    let f_int = (after / p).sqrt();
    let f_non = ((1.0 - after) / q).sqrt();
    state.rescale_branches(decomposition, f_int, f_non);
    StepOutcome::Moved { before: p, after }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkResult {
    pub absorbed_branch: Branch,
    pub steps: u64,
    pub trajectory: Option<Vec<f64>>,
}

/// Runs the two-branch walk from `p0` until absorption.
pub fn run_walk(p0: f64, config: &CollapseConfig, rng: &mut TrialRng) -> Result<WalkResult, CollapseError> {
    walk(p0, config, rng, false)
}

/// As [`run_walk`], also returning every mass visited (starting with `p0`).
pub fn run_walk_traced(p0: f64, config: &CollapseConfig, rng: &mut TrialRng) -> Result<WalkResult, CollapseError> {
    walk(p0, config, rng, true)
}

fn walk(p0: f64, config: &CollapseConfig, rng: &mut TrialRng, trace: bool) -> Result<WalkResult, CollapseError> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CollapseError::InvalidMass(p0));
    }
    if config.sequencing_mode == SequencingMode::ForcedSameS {
        return Err(CollapseError::FrozenWalk);
    }
    let delta = config.delta_ave;
    let mut trajectory = trace.then(|| vec![p0]);
    let mut p = p0;
    let mut steps = 0u64;
    while p > 0.0 && p < 1.0 {
        if steps == config.step_budget {
            return Err(CollapseError::StepBudgetExceeded {
                budget: config.step_budget,
                mass: p,
            });
        }
        p = transfer(p, delta, rng.coin());
        steps += 1;
        if let Some(t) = trajectory.as_mut() {
            t.push(p);
        }
    }
    Ok(WalkResult {
        absorbed_branch: if p == 1.0 { Branch::Interacting } else { Branch::Noninteracting },
        steps,
        trajectory,
    })
}

/// Unitary part of a schedule entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    ControlledFlip { detector: usize },
    ChangeBasis { particles: Vec<usize> },
    Identity,
}

impl Interaction {
    fn apply(&self, state: &mut PureState) -> Result<(), StateError> {
        match self {
            Interaction::ControlledFlip { detector } => state.apply_controlled_flip(*detector),
            Interaction::ChangeBasis { particles } => state.change_basis(particles),
            Interaction::Identity => Ok(()),
        }
    }
}

/// Selects the interacting branch by the value of one particle's bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchPredicate {
    ParticleUp(usize),
    ParticleDown(usize),
}

impl BranchPredicate {
    pub fn matches(&self, index: usize) -> bool {
        match *self {
            BranchPredicate::ParticleUp(p) => index >> p & 1 == 0,
            BranchPredicate::ParticleDown(p) => index >> p & 1 == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SAssignment {
    #[default]
    Next,
    /// Same sequencing value as the preceding entry.
    WithPrevious,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub interaction: Interaction,
    pub predicate: BranchPredicate,
    pub s: SAssignment,
}

impl ScheduleEntry {
    pub fn new(interaction: Interaction, predicate: BranchPredicate) -> Self {
        ScheduleEntry {
            interaction,
            predicate,
            s: SAssignment::Next,
        }
    }
}

/// Resolves sequencing values for a schedule. Entries sharing a value are
/// all marked `shared`.
pub fn assign_sequence(schedule: &[ScheduleEntry], mode: SequencingMode) -> Vec<SequenceStamp> {
    let mut counter = SequenceCounter::new();
    let values: Vec<u64> = schedule
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if i > 0 && e.s == SAssignment::Next {
                counter.advance()
            } else {
                counter.current()
            }
        })
        .collect();
    values
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let partner = (i > 0 && values[i - 1] == s) || values.get(i + 1) == Some(&s);
            SequenceStamp {
                s,
                shared: mode == SequencingMode::ForcedSameS || partner,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Moved,
    Skipped,
    /// No nontrivial decomposition existed.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub s: u64,
    pub kind: StepKind,
    pub mass_before: f64,
    pub mass_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: PureState,
    pub steps: Vec<StepRecord>,
}

impl Evolution {
    /// Index of the step at which the walk was first absorbed.
    pub fn absorbed_at(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|r| r.kind == StepKind::Moved && (r.mass_after == 0.0 || r.mass_after == 1.0))
    }
}

/// Applies each unitary followed by one collapse step on the decomposition
/// its predicate induces.
pub fn interleaved_evolution(
    initial: PureState,
    schedule: &[ScheduleEntry],
    config: &CollapseConfig,
    rng: &mut TrialRng,
) -> Result<Evolution, CollapseError> {
    let stamps = assign_sequence(schedule, config.sequencing_mode);
    let mut state = initial;
    let mut steps = Vec::with_capacity(schedule.len());
    for (entry, stamp) in schedule.iter().zip(stamps) {
        entry.interaction.apply(&mut state)?;
        let predicate = entry.predicate;
        let record = match state.branch_decompose(|i| predicate.matches(i)) {
            Ok(decomposition) => {
                let outcome = collapse_step(&mut state, &decomposition, config, rng, stamp);
                match outcome {
                    StepOutcome::Moved { before, after } => StepRecord {
                        s: stamp.s,
                        kind: StepKind::Moved,
                        mass_before: before,
                        mass_after: after,
                    },
                    StepOutcome::Skipped { mass } => StepRecord {
                        s: stamp.s,
                        kind: StepKind::Skipped,
                        mass_before: mass,
                        mass_after: mass,
                    },
                }
            }
            Err(StateError::DegenerateDecomposition { occupied }) => {
                let mass = if occupied == Branch::Interacting { 1.0 } else { 0.0 };
                StepRecord {
                    s: stamp.s,
                    kind: StepKind::Degenerate,
                    mass_before: mass,
                    mass_after: mass,
                }
            }
            Err(e) => return Err(e.into()),
        };
        steps.push(record);
    }
    Ok(Evolution { state, steps })
}
