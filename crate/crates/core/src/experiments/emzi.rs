//! Coupled eraser with two small interacting branches.
//!
//! The first electron carries two small branches `α` (interaction a) and
//! `γ` (interaction b), each with squared amplitude `r·δ`, split off a large
//! noninteracting branch `β`. After the two interactions the interacting
//! part `α'|aa> + γ'|bb>` is read out in the symmetric/antisymmetric basis:
//!
//! ```text
//! SS, AA : (α' + γ') / 2
//! SA, AS : (α' - γ') / 2
//! ```
//!
//! Cross terms SA/AS appear only when the two branches ended up unequal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_trials, Executor, ExperimentError};
use crate::collapse::{transfer, CollapseConfig, SequencingMode};
use crate::rng::TrialRng;
use crate::stats::MeanVar;

pub const EMZI_ARM: u8 = 0;

/// `(r - sqrt(r^2 - 1)) / (4r)`: cross-term share of interacting detections.
pub fn emzi_analytic_cross_fraction(r_branch: f64) -> Result<f64, ExperimentError> {
    check_ratio(r_branch)?;
    Ok((r_branch - (r_branch * r_branch - 1.0).sqrt()) / (4.0 * r_branch))
}

/// `(r - sqrt(r^2 - 1)) / 4`, the form that matches the quoted values at
/// r = 2 and r = 10 but not the derivation. Reported for comparison only.
pub fn emzi_alternative_cross_fraction(r_branch: f64) -> Result<f64, ExperimentError> {
    check_ratio(r_branch)?;
    Ok((r_branch - (r_branch * r_branch - 1.0).sqrt()) / 4.0)
}

fn check_ratio(r_branch: f64) -> Result<(), ExperimentError> {
    if !(r_branch >= 1.0 && r_branch.is_finite()) {
        return Err(ExperimentError::InvalidParameter(format!("r_branch must be >= 1, got {r_branch}")));
    }
    Ok(())
}

/// Readout channels, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmziChannel {
    SS,
    AA,
    SA,
    AS,
    #[serde(rename = "N")]
    Noninteracting,
}

impl EmziChannel {
    pub const ALL: [EmziChannel; 5] = [
        EmziChannel::SS,
        EmziChannel::AA,
        EmziChannel::SA,
        EmziChannel::AS,
        EmziChannel::Noninteracting,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EmziChannel::SS => "SS",
            EmziChannel::AA => "AA",
            EmziChannel::SA => "SA",
            EmziChannel::AS => "AS",
            EmziChannel::Noninteracting => "N",
        }
    }

    pub fn is_cross(self) -> bool {
        matches!(self, EmziChannel::SA | EmziChannel::AS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmziBranchState {
    pub alpha: Complex64,
    pub gamma: Complex64,
    pub beta: Complex64,
    pub r_branch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Small {
    Alpha,
    Gamma,
}

impl EmziBranchState {
    /// Equal real branches of squared amplitude `r·δ`.
    pub fn prepare(r_branch: f64, delta: f64) -> Result<Self, ExperimentError> {
        check_ratio(r_branch)?;
        let mass = r_branch * delta;
        if mass.is_nan() || mass > 0.5 {
            return Err(ExperimentError::InvalidParameter(format!(
                "r_branch * delta must be <= 0.5, got {mass}"
            )));
        }
        Ok(EmziBranchState {
            alpha: Complex64::new(mass.sqrt(), 0.0),
            gamma: Complex64::new(mass.sqrt(), 0.0),
            beta: Complex64::new((1.0 - 2.0 * mass).sqrt(), 0.0),
            r_branch,
        })
    }

    /// Interaction `a` trades mass between `α` and `β`.
    pub fn interact_a(&mut self, delta: f64, raise: bool) {
        self.interact(Small::Alpha, delta, raise);
    }

    /// Interaction `b` trades mass between `γ` and `β`.
    pub fn interact_b(&mut self, delta: f64, raise: bool) {
        self.interact(Small::Gamma, delta, raise);
    }

    fn interact(&mut self, which: Small, delta: f64, raise: bool) {
        let branch = match which {
            Small::Alpha => &mut self.alpha,
            Small::Gamma => &mut self.gamma,
        };
        let p = branch.norm_sqr();
        let after = transfer(p, delta, raise);
        *branch = if after == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            *branch * (after / p).sqrt()
        };
        let rest = (1.0 - self.alpha.norm_sqr() - self.gamma.norm_sqr()).max(0.0);
        let phase = if self.beta.norm() > 0.0 {
            self.beta / self.beta.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.beta = phase * rest.sqrt();
    }

    pub fn channel_amplitude(&self, channel: EmziChannel) -> Complex64 {
        match channel {
            EmziChannel::SS | EmziChannel::AA => (self.alpha + self.gamma) * 0.5,
            EmziChannel::SA | EmziChannel::AS => (self.alpha - self.gamma) * 0.5,
            EmziChannel::Noninteracting => self.beta,
        }
    }

    /// Channel probabilities in [`EmziChannel::ALL`] order.
    pub fn channel_probabilities(&self) -> [f64; 5] {
        EmziChannel::ALL.map(|c| self.channel_amplitude(c).norm_sqr())
    }

    pub fn sample(&self, u: f64) -> EmziChannel {
        let probs = self.channel_probabilities();
        let mut acc = 0.0;
        for (channel, p) in EmziChannel::ALL.iter().zip(probs) {
            acc += p;
            if u < acc {
                return *channel;
            }
        }
        EmziChannel::Noninteracting
    }
}

/// One of the four sign patterns of the two interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmziCase {
    pub raise_a: bool,
    pub raise_b: bool,
    pub probabilities: [f64; 5],
}

/// Exact channel probabilities for each sign pair `(a, b)`, in the order
/// `(+,-), (-,+), (+,+), (-,-)`.
pub fn enumerate_cases(r_branch: f64, delta: f64) -> Result<[EmziCase; 4], ExperimentError> {
    let base = EmziBranchState::prepare(r_branch, delta)?;
    Ok(
        [(true, false), (false, true), (true, true), (false, false)].map(|(raise_a, raise_b)| {
            let mut s = base;
            s.interact_a(delta, raise_a);
            s.interact_b(delta, raise_b);
            EmziCase {
                raise_a,
                raise_b,
                probabilities: s.channel_probabilities(),
            }
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmziTrial {
    pub trial_index: u64,
    pub raise_a: Option<bool>,
    pub raise_b: Option<bool>,
    pub channel: EmziChannel,
    pub probabilities: [f64; 5],
}

pub fn emzi_trial(r_branch: f64, config: &CollapseConfig, trial_index: u64) -> Result<EmziTrial, ExperimentError> {
    let delta = config.delta_ave();
    let mut state = EmziBranchState::prepare(r_branch, delta)?;
    let mut rng = TrialRng::for_trial(config.master_seed, EMZI_ARM, trial_index);
    // Two timelike-separated interactions at distinct s, unless forced to
    // share one, in which case neither moves any amplitude.
    let (raise_a, raise_b) = match config.sequencing_mode {
        SequencingMode::DistinctS => {
            let a = rng.coin();
            let b = rng.coin();
            state.interact_a(delta, a);
            state.interact_b(delta, b);
            (Some(a), Some(b))
        }
        SequencingMode::ForcedSameS => (None, None),
    };
    let channel = state.sample(rng.uniform());
    Ok(EmziTrial {
        trial_index,
        raise_a,
        raise_b,
        channel,
        probabilities: state.channel_probabilities(),
    })
}

pub fn emzi_trials(r_branch: f64, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<Vec<EmziTrial>, ExperimentError> {
    require_trials(trials)?;
    EmziBranchState::prepare(r_branch, config.delta_ave())?;
    exec.run(trials, |i| emzi_trial(r_branch, config, i))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub ss: u64,
    pub aa: u64,
    pub sa: u64,
    #[serde(rename = "as")]
    pub as_: u64,
    pub noninteracting: u64,
}

impl ChannelCounts {
    fn add(&mut self, c: EmziChannel) {
        match c {
            EmziChannel::SS => self.ss += 1,
            EmziChannel::AA => self.aa += 1,
            EmziChannel::SA => self.sa += 1,
            EmziChannel::AS => self.as_ += 1,
            EmziChannel::Noninteracting => self.noninteracting += 1,
        }
    }

    pub fn interacting(&self) -> u64 {
        self.ss + self.aa + self.sa + self.as_
    }

    pub fn cross(&self) -> u64 {
        self.sa + self.as_
    }
}

/// Channel probabilities are estimated from each trial's exact Born
/// weights given its sampled interaction signs; `sampled` holds the
/// single-detection tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmziReport {
    pub trials: u64,
    pub r_branch: f64,
    pub delta: f64,
    pub sequencing_mode: SequencingMode,
    pub p_ss: f64,
    pub p_aa: f64,
    pub p_sa: f64,
    pub p_as: f64,
    pub p_noninteracting: f64,
    pub total_interacting: f64,
    pub cross_fraction: f64,
    pub cross_fraction_se: f64,
    pub analytic_cross_fraction: f64,
    pub alternative_cross_fraction: f64,
    pub sampled: ChannelCounts,
    pub sampled_cross_fraction: f64,
    pub sampled_cross_fraction_se: f64,
}

pub fn summarize_emzi(r_branch: f64, config: &CollapseConfig, trials: &[EmziTrial]) -> Result<EmziReport, ExperimentError> {
    let n = trials.len() as f64;
    let mut sums = [0.0f64; 5];
    let mut sampled = ChannelCounts::default();
    for t in trials {
        for (s, p) in sums.iter_mut().zip(t.probabilities) {
            *s += p;
        }
        sampled.add(t.channel);
    }
    let [p_ss, p_aa, p_sa, p_as, p_noninteracting] = sums.map(|s| s / n);
    let total_interacting = p_ss + p_aa + p_sa + p_as;
    let cross = p_sa + p_as;
    let cross_fraction = if total_interacting > 0.0 { cross / total_interacting } else { 0.0 };
    // ratio estimator: var(R) ~ var(x - R y) / (n ybar^2)
    let residuals: MeanVar = trials
        .iter()
        .map(|t| {
            let p = t.probabilities;
            (p[2] + p[3]) - cross_fraction * (p[0] + p[1] + p[2] + p[3])
        })
        .collect();
    let cross_fraction_se = if total_interacting > 0.0 {
        residuals.variance().sqrt() / (n.sqrt() * total_interacting)
    } else {
        0.0
    };
    let hits = sampled.interacting();
    let sampled_cross_fraction = if hits > 0 { sampled.cross() as f64 / hits as f64 } else { 0.0 };
    let sampled_cross_fraction_se = if hits > 0 {
        (sampled_cross_fraction * (1.0 - sampled_cross_fraction) / hits as f64).sqrt()
    } else {
        0.0
    };
    Ok(EmziReport {
        trials: trials.len() as u64,
        r_branch,
        delta: config.delta_ave(),
        sequencing_mode: config.sequencing_mode,
        p_ss,
        p_aa,
        p_sa,
        p_as,
        p_noninteracting,
        total_interacting,
        cross_fraction,
        cross_fraction_se,
        analytic_cross_fraction: emzi_analytic_cross_fraction(r_branch)?,
        alternative_cross_fraction: emzi_alternative_cross_fraction(r_branch)?,
        sampled,
        sampled_cross_fraction,
        sampled_cross_fraction_se,
    })
}

/// Monte Carlo over the two interaction signs. `δ` comes from `config`.
pub fn run_emzi_mc(r_branch: f64, trials: u64, config: &CollapseConfig, exec: &Executor) -> Result<EmziReport, ExperimentError> {
    let records = emzi_trials(r_branch, trials, config, exec)?;
    summarize_emzi(r_branch, config, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Basis, PureState};

    #[test]
    fn analytic_values() {
        assert_eq!(emzi_analytic_cross_fraction(1.0).unwrap(), 0.25);
        let r2 = emzi_analytic_cross_fraction(2.0).unwrap();
        assert!((r2 - 0.0334936).abs() < 5e-8, "{r2}");
        assert!((emzi_alternative_cross_fraction(2.0).unwrap() - 0.0669873).abs() < 5e-8);
        assert!((emzi_alternative_cross_fraction(10.0).unwrap() - 0.0125314).abs() < 5e-8);
        assert!(emzi_analytic_cross_fraction(0.5).is_err());
        assert!(emzi_analytic_cross_fraction(f64::NAN).is_err());
    }

    #[test]
    fn analytic_tail_goes_like_one_over_eight_r_squared() {
        for r in [1e2, 1e3] {
            let v = emzi_analytic_cross_fraction(r).unwrap();
            assert!((v * 8.0 * r * r - 1.0).abs() < 1e-3, "{r}: {v}");
        }
    }

    #[test]
    fn r1_cases_enumerated() {
        let d = 0.01;
        let cases = enumerate_cases(1.0, d).unwrap();
        for case in &cases[..2] {
            for p in &case.probabilities[..4] {
                assert!((p - d / 2.0).abs() < 1e-15);
            }
        }
        let c = cases[2].probabilities;
        assert!((c[0] - 2.0 * d).abs() < 1e-15 && (c[1] - 2.0 * d).abs() < 1e-15);
        assert_eq!(c[2], 0.0);
        assert_eq!(c[3], 0.0);
        assert!(cases[3].probabilities[..4].iter().all(|&p| p == 0.0));
        // down-move at r = 1 zeroes the branch exactly
        let mut s = EmziBranchState::prepare(1.0, d).unwrap();
        s.interact_a(d, false);
        assert_eq!(s.alpha.norm_sqr(), 0.0);
    }

    #[test]
    fn enumeration_reproduces_analytic_ratio() {
        for r in [1.0, 1.5, 2.0, 5.0, 10.0] {
            let d = 0.01;
            let cases = enumerate_cases(r, d).unwrap();
            let cross: f64 = cases.iter().map(|c| c.probabilities[2] + c.probabilities[3]).sum::<f64>() / 4.0;
            let total: f64 = cases.iter().map(|c| c.probabilities[..4].iter().sum::<f64>()).sum::<f64>() / 4.0;
            assert!((total - 2.0 * r * d).abs() < 1e-12);
            let want = emzi_analytic_cross_fraction(r).unwrap();
            assert!((cross / total - want).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn register_route_agrees_with_closed_form_amplitudes() {
        // α'|aa> + γ'|bb> rotated in both slots gives the S'/A' amplitudes
        let d = 0.02;
        for (ra, rb) in [(true, false), (false, true), (true, true)] {
            let mut s = EmziBranchState::prepare(2.0, d).unwrap();
            s.interact_a(d, ra);
            s.interact_b(d, rb);
            let norm = (s.alpha.norm_sqr() + s.gamma.norm_sqr()).sqrt();
            let zero = Complex64::new(0.0, 0.0);
            let amps = vec![s.alpha / norm, zero, zero, s.gamma / norm];
            let mut reg = PureState::from_amplitudes(amps, vec![Basis::X; 2]).unwrap();
            reg.change_basis(&[0, 1]).unwrap();
            let a = reg.amplitudes();
            let check = |got: Complex64, ch| assert!((got * norm - s.channel_amplitude(ch)).norm() < 1e-14);
            check(a[0b00], EmziChannel::SS);
            check(a[0b11], EmziChannel::AA);
            check(a[0b01], EmziChannel::SA);
            check(a[0b10], EmziChannel::AS);
        }
    }

    #[test]
    fn branch_state_stays_normalized() {
        let mut s = EmziBranchState::prepare(5.0, 0.05).unwrap();
        s.interact_a(0.05, true);
        s.interact_b(0.05, false);
        let total: f64 = s.channel_probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((s.alpha.norm_sqr() + s.gamma.norm_sqr() + s.beta.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prepare_rejects_large_branches() {
        assert!(EmziBranchState::prepare(20.0, 0.05).is_err());
        assert!(EmziBranchState::prepare(0.9, 0.05).is_err());
    }

    #[test]
    fn same_s_control_has_no_cross_terms() {
        let config = CollapseConfig::new(0.01).unwrap().with_sequencing(SequencingMode::ForcedSameS);
        let r = run_emzi_mc(1.0, 10_000, &config, &Executor::default()).unwrap();
        assert_eq!(r.cross_fraction, 0.0);
        assert_eq!(r.sampled.cross(), 0);
        assert!((r.total_interacting - 0.02).abs() < 1e-12);
    }

    #[test]
    fn mc_report_is_consistent() {
        let config = CollapseConfig::new(0.01).unwrap().with_seed(12);
        let r = run_emzi_mc(1.0, 100_000, &config, &Executor::default()).unwrap();
        let sum = r.p_ss + r.p_aa + r.p_sa + r.p_as + r.p_noninteracting;
        assert!((sum - 1.0).abs() < 1e-9);
        assert!((r.cross_fraction - (r.p_sa + r.p_as) / r.total_interacting).abs() < 1e-15);
        assert!(
            (r.cross_fraction - 0.25).abs() < 4.0 * r.cross_fraction_se,
            "{} ± {}",
            r.cross_fraction,
            r.cross_fraction_se
        );
        let s = r.sampled;
        assert_eq!(s.interacting() + s.noninteracting, 100_000);
        let hits = s.interacting() as f64 / 1e5;
        assert!((hits - 0.02).abs() < 4.0 * (0.02 * 0.98 / 1e5f64).sqrt());
    }
}
