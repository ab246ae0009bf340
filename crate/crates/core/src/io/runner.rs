use super::manifest::{EmziAnalyticReport, Experiment, ManifestError, Report, RunManifest, Summary};
use super::records::TrialRecordLine;
use crate::experiments::bell::{bell_trials, summarize_bell};
use crate::experiments::emzi::{emzi_trials, summarize_emzi};
use crate::experiments::epr::{epr_trials, summarize_epr, EprTrial, NoSignalingReport};
use crate::experiments::walk::{summarize_walk, walk_trials};
use crate::experiments::Executor;
use crate::state::{format_bitstring, Branch};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "COLLAPSE_LAB_THREADS";

/// Worker count from `COLLAPSE_LAB_THREADS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: Summary,
    pub records: Vec<TrialRecordLine>,
}

fn epr_records(trials: Vec<EprTrial>, arm: &str, n: usize, out: &mut Vec<TrialRecordLine>) {
    out.extend(trials.into_iter().map(|t| TrialRecordLine {
        trial_index: t.trial_index,
        arm: Some(arm.to_string()),
        outcome: format_bitstring(t.outcome, n),
        parity: None,
        q: None,
        steps_to_absorption: t.steps_to_absorption,
        s_history_length: t.s_history_length,
    }));
}

/// Validates the manifest, runs the experiment and returns the summary
/// together with one record per trial.
pub fn run_manifest(manifest: &RunManifest, exec: &Executor) -> Result<RunOutput, ManifestError> {
    manifest.validate()?;
    let p = &manifest.parameters;
    let mut records = Vec::new();
    let report = match manifest.experiment {
        Experiment::EmziAnalytic => Report::EmziAnalytic(EmziAnalyticReport::new(p.r_branch.unwrap_or_default())?),
        Experiment::BellParity => {
            let config = manifest.collapse_config()?;
            let n = manifest.n();
            let trials = bell_trials(n, manifest.trials(), &config, exec)?;
            let report = summarize_bell(n, &config, &trials)?;
            records.extend(trials.into_iter().map(|t| TrialRecordLine {
                trial_index: t.trial_index,
                arm: None,
                outcome: format_bitstring(t.outcome, n + 1),
                parity: Some(t.parity),
                q: Some(t.q),
                steps_to_absorption: t.steps_to_absorption,
                s_history_length: t.s_history_length,
            }));
            Report::BellParity(report)
        }
        Experiment::Epr => {
            let config = manifest.collapse_config()?;
            let chain = manifest.n();
            let unmeasured = epr_trials(manifest.trials(), &config, false, chain, exec)?;
            let measured = epr_trials(manifest.trials(), &config, true, chain, exec)?;
            let report = NoSignalingReport::from_arms(summarize_epr(false, chain, &unmeasured), summarize_epr(true, chain, &measured))?;
            epr_records(unmeasured, "unmeasured", chain + 2, &mut records);
            epr_records(measured, "measured", chain + 2, &mut records);
            Report::Epr(report)
        }
        Experiment::Emzi => {
            let config = manifest.collapse_config()?;
            let r = p.r_branch.unwrap_or_default();
            let trials = emzi_trials(r, manifest.trials(), &config, exec)?;
            let report = summarize_emzi(r, &config, &trials)?;
            records.extend(trials.into_iter().map(|t| TrialRecordLine {
                trial_index: t.trial_index,
                arm: None,
                outcome: t.channel.label().to_string(),
                parity: None,
                q: None,
                steps_to_absorption: None,
                s_history_length: if t.raise_a.is_some() { 2 } else { 1 },
            }));
            Report::Emzi(report)
        }
        Experiment::Walk => {
            let config = manifest.collapse_config()?;
            let p0 = p.p0.unwrap_or_default();
            let trials = walk_trials(p0, manifest.trials(), &config, exec)?;
            let report = summarize_walk(p0, &config, &trials)?;
            records.extend(trials.into_iter().map(|t| TrialRecordLine {
                trial_index: t.trial_index,
                arm: None,
                outcome: match t.absorbed_branch {
                    Branch::Interacting => "INTERACTING".to_string(),
                    Branch::Noninteracting => "NONINTERACTING".to_string(),
                },
                parity: None,
                q: None,
                steps_to_absorption: Some(t.steps),
                s_history_length: t.steps,
            }));
            Report::Walk(report)
        }
    };
    Ok(RunOutput {
        summary: Summary {
            manifest: manifest.clone(),
            report,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::manifest::RunParameters;
    use crate::state::Parity;

    fn run(experiment: Experiment, parameters: RunParameters) -> RunOutput {
        let m = RunManifest::new(experiment, parameters, 3);
        run_manifest(&m, &Executor::with_workers(2)).unwrap()
    }

    #[test]
    fn bell_tallies_match_records() {
        let out = run(
            Experiment::BellParity,
            RunParameters {
                n: Some(3),
                trials: Some(500),
                delta: Some(0.2),
                ..Default::default()
            },
        );
        assert_eq!(out.records.len(), 500);
        let Report::BellParity(r) = &out.summary.report else { panic!() };
        let odd = out.records.iter().filter(|l| l.parity == Some(Parity::Odd)).count() as u64;
        let consistent = out.records.iter().filter(|l| l.q == Some(1)).count() as u64;
        assert_eq!(r.count_consistent, consistent);
        assert!(odd <= 500);
        assert!(out.records.iter().all(|l| l.outcome.len() == 4));
    }

    #[test]
    fn epr_emits_both_arms() {
        let out = run(
            Experiment::Epr,
            RunParameters {
                n: Some(2),
                trials: Some(100),
                ..Default::default()
            },
        );
        assert_eq!(out.records.len(), 200);
        assert_eq!(out.records[0].arm.as_deref(), Some("unmeasured"));
        assert_eq!(out.records[199].arm.as_deref(), Some("measured"));
    }

    #[test]
    fn walk_and_emzi_records() {
        let out = run(
            Experiment::Walk,
            RunParameters {
                p0: Some(0.5),
                delta: Some(0.1),
                trials: Some(50),
                ..Default::default()
            },
        );
        let Report::Walk(r) = &out.summary.report else { panic!() };
        let hits = out.records.iter().filter(|l| l.outcome == "INTERACTING").count() as u64;
        assert_eq!(hits, r.absorbed_interacting);

        let out = run(
            Experiment::Emzi,
            RunParameters {
                r_branch: Some(2.0),
                trials: Some(50),
                ..Default::default()
            },
        );
        assert_eq!(out.records.len(), 50);
        assert!(out
            .records
            .iter()
            .all(|l| ["SS", "AA", "SA", "AS", "N"].contains(&l.outcome.as_str())));
    }

    #[test]
    fn analytic_has_no_records() {
        let out = run(
            Experiment::EmziAnalytic,
            RunParameters {
                r_branch: Some(1.0),
                ..Default::default()
            },
        );
        assert!(out.records.is_empty());
        let Report::EmziAnalytic(r) = &out.summary.report else { panic!() };
        assert!((r.cross_fraction - 0.25).abs() < 1e-15);
    }
}
