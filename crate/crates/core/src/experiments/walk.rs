//! Bare two-branch collapse walk: absorption frequencies and collapse time.

use serde::{Deserialize, Serialize};

use super::{require_trials, Executor, ExperimentError};
use crate::collapse::{run_walk, transfer, CollapseConfig, CollapseError, SequencingMode};
use crate::rng::TrialRng;
use crate::state::Branch;
use crate::stats::{BinomialSummary, MeanVar, DEFAULT_Z};

pub const WALK_ARM: u8 = 0;

/// `p0 (1 - p0) / δ²`, the mean number of interactions to absorption away
/// from the clamped region. Equals `1 / (4 δ²)` at `p0 = 1/2`.
pub fn expected_collapse_steps(p0: f64, delta: f64) -> Result<f64, ExperimentError> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CollapseError::InvalidMass(p0).into());
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(CollapseError::InvalidDelta(delta).into());
    }
    Ok(p0 * (1.0 - p0) / (delta * delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTrial {
    pub trial_index: u64,
    pub absorbed_branch: Branch,
    pub steps: u64,
}

pub fn walk_trials(p0: f64, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<Vec<WalkTrial>, ExperimentError> {
    require_trials(trials)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CollapseError::InvalidMass(p0).into());
    }
    exec.run(trials, |i| {
        let mut rng = TrialRng::for_trial(config.master_seed, WALK_ARM, i);
        let w = run_walk(p0, config, &mut rng)?;
        Ok(WalkTrial {
            trial_index: i,
            absorbed_branch: w.absorbed_branch,
            steps: w.steps,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub p0: f64,
    pub delta: f64,
    pub trials: u64,
    pub absorbed_interacting: u64,
    pub absorption: BinomialSummary,
    pub mean_steps: f64,
    pub steps_se: f64,
    pub expected_steps: f64,
}

pub fn summarize_walk(p0: f64, config: &CollapseConfig, trials: &[WalkTrial]) -> Result<WalkReport, ExperimentError> {
    let m = trials.len() as u64;
    let hits = trials.iter().filter(|t| t.absorbed_branch == Branch::Interacting).count() as u64;
    let steps: MeanVar = trials.iter().map(|t| t.steps as f64).collect();
    Ok(WalkReport {
        p0,
        delta: config.delta_ave(),
        trials: m,
        absorbed_interacting: hits,
        absorption: BinomialSummary::new(hits, m, DEFAULT_Z)?,
        mean_steps: steps.mean(),
        steps_se: steps.standard_error(),
        expected_steps: expected_collapse_steps(p0, config.delta_ave())?,
    })
}

pub fn run_walk_experiment(p0: f64, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<WalkReport, ExperimentError> {
    let records = walk_trials(p0, trials, config, exec)?;
    summarize_walk(p0, config, &records)
}

/// Root-mean-square deviation of the interacting mass from `p0` after
/// `n_steps` transfers (absorbed walks stay put), over `trials` walks.
pub fn rms_mass_deviation(p0: f64, n_steps: u64, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<f64, ExperimentError> {
    require_trials(trials)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CollapseError::InvalidMass(p0).into());
    }
    let frozen = config.sequencing_mode == SequencingMode::ForcedSameS;
    let squares = exec.run(trials, |i| {
        let mut rng = TrialRng::for_trial(config.master_seed, WALK_ARM, i);
        let mut p = p0;
        for _ in 0..n_steps {
            if frozen || p == 0.0 || p == 1.0 {
                break;
            }
            p = transfer(p, config.delta_ave(), rng.coin());
        }
        Ok((p - p0) * (p - p0))
    })?;
    let mean: MeanVar = squares.into_iter().collect();
    Ok(mean.mean().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact absorption probability and mean steps on the lattice
    /// `{0, δ, ..., 1}` by Gauss-Seidel on the first-step equations.
    fn lattice_oracle(k0: usize, n: usize) -> (f64, f64) {
        let mut hit = vec![0.0f64; n + 1];
        let mut time = vec![0.0f64; n + 1];
        hit[n] = 1.0;
        for _ in 0..200_000 {
            let mut change: f64 = 0.0;
            for k in 1..n {
                let h = 0.5 * (hit[k - 1] + hit[k + 1]);
                let t = 1.0 + 0.5 * (time[k - 1] + time[k + 1]);
                change = change.max((h - hit[k]).abs()).max((t - time[k]).abs());
                hit[k] = h;
                time[k] = t;
            }
            if change < 1e-13 {
                break;
            }
        }
        (hit[k0], time[k0])
    }

    #[test]
    fn expected_steps_examples() {
        assert!((expected_collapse_steps(0.5, 0.01).unwrap() - 2500.0).abs() < 1e-9);
        assert!((expected_collapse_steps(0.5, 0.05).unwrap() - 100.0).abs() < 1e-9);
        assert!((expected_collapse_steps(0.1, 0.01).unwrap() - 900.0).abs() < 1e-9);
        assert!(expected_collapse_steps(0.0, 0.01).is_err());
        assert!(expected_collapse_steps(0.5, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_lattice_oracle() {
        for (k0, n) in [(10, 20), (3, 10), (6, 20), (1, 5)] {
            let (hit, time) = lattice_oracle(k0, n);
            let p0 = k0 as f64 / n as f64;
            let delta = 1.0 / n as f64;
            assert!((hit - p0).abs() < 1e-9);
            let want = expected_collapse_steps(p0, delta).unwrap();
            assert!((time - want).abs() < 1e-6 * want, "{k0}/{n}: {time} vs {want}");
        }
    }

    #[test]
    fn born_rule_at_p03() {
        let config = CollapseConfig::new(0.02).unwrap().with_seed(21);
        let r = run_walk_experiment(0.3, 100_000, &config, &Executor::default()).unwrap();
        assert!((r.absorption.point - 0.3).abs() < 0.005, "{}", r.absorption.point);
    }

    #[test]
    fn collapse_time_at_half() {
        let config = CollapseConfig::new(0.05).unwrap().with_seed(22);
        let r = run_walk_experiment(0.5, 100_000, &config, &Executor::default()).unwrap();
        assert!((r.mean_steps - 100.0).abs() < 5.0, "{}", r.mean_steps);
        assert!((r.expected_steps - 100.0).abs() < 1e-9);
    }

    #[test]
    fn mean_steps_at_p01_within_five_percent() {
        let config = CollapseConfig::new(0.01).unwrap().with_seed(23);
        let r = run_walk_experiment(0.1, 20_000, &config, &Executor::default()).unwrap();
        assert!((r.mean_steps / 900.0 - 1.0).abs() < 0.05, "{}", r.mean_steps);
    }

    #[test]
    fn rms_deviation_grows_like_sqrt_n() {
        let config = CollapseConfig::new(0.01).unwrap().with_seed(24);
        let rms = rms_mass_deviation(0.5, 40, 200_000, &config, &Executor::default()).unwrap();
        let want = 40f64.sqrt() * 0.01;
        assert!((rms / want - 1.0).abs() < 0.01, "{rms} vs {want}");
        let frozen = config.with_sequencing(SequencingMode::ForcedSameS);
        assert_eq!(rms_mass_deviation(0.5, 40, 10, &frozen, &Executor::default()).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_p0() {
        let config = CollapseConfig::new(0.05).unwrap();
        assert!(run_walk_experiment(1.0, 10, &config, &Executor::default()).is_err());
    }
}
