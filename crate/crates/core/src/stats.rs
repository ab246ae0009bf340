//! Estimators and intervals for experiment reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("value {0} is not +1 or -1")]
    NotUnitSign(i64),
    #[error("need 0 <= successes ({successes}) <= trials ({trials}) and trials >= 1")]
    BadCounts { successes: u64, trials: u64 },
    #[error("distributions have different supports ({0} vs {1})")]
    SupportMismatch(usize, usize),
}

/// Mean of the per-trial `±1` labels, with `1 - r` as the collapse fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionMeasure {
    pub r: f64,
    pub collapse_fraction: f64,
}

pub fn superposition_measure(q_values: &[i8]) -> Result<SuperpositionMeasure, StatsError> {
    if q_values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sum = 0i64;
    for &q in q_values {
        if q != 1 && q != -1 {
            return Err(StatsError::NotUnitSign(q.into()));
        }
        sum += i64::from(q);
    }
    let r = sum as f64 / q_values.len() as f64;
    Ok(SuperpositionMeasure {
        r,
        collapse_fraction: 1.0 - r,
    })
}

/// Wilson score interval for a binomial proportion, clamped to [0, 1].
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64), StatsError> {
    if trials == 0 || successes > trials {
        return Err(StatsError::BadCounts { successes, trials });
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((lo.min(p), hi.max(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSummary {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub z: f64,
}

impl BinomialSummary {
    pub fn new(successes: u64, trials: u64, z: f64) -> Result<Self, StatsError> {
        let (interval_lo, interval_hi) = wilson_interval(successes, trials, z)?;
        Ok(BinomialSummary {
            successes,
            trials,
            point: successes as f64 / trials as f64,
            interval_lo,
            interval_hi,
            z,
        })
    }

    /// Plain binomial standard error of the point estimate.
    pub fn standard_error(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }
}

/// Total-variation distance `(1/2) Σ |a - b|`.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::SupportMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; zero for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanVar {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanVar::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}
