//! Dense pure states of small registers of two-level particles.
//!
//! Basis index bit `i` holds particle `i`; a clear bit is spin up and a set
//! bit is spin down, in whichever basis the particle is currently tagged
//! with. Particle 0 is the subject, particles `1..n` are detectors.

use std::fmt;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amplitude of one basis component.
pub type Amplitude = Complex64;

/// Default register bound: 24 particles, 16M amplitudes.
pub const DEFAULT_MAX_PARTICLES: usize = 24;

/// Tolerance used when validating normalization.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Spin basis a particle is currently expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn flipped(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

/// One side of a binary branch decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    Interacting,
    Noninteracting,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("register of {requested} particles exceeds capacity {max}")]
    Capacity { requested: usize, max: usize },
    #[error("particle index {index} out of range for a {n_particles}-particle register")]
    IndexOutOfRange { index: usize, n_particles: usize },
    #[error("particle {particle} is tagged {found:?}, operation requires {expected:?}")]
    BasisMismatch { particle: usize, expected: Basis, found: Basis },
    /// All of the weight sits on one side of the decomposition. The collapse
    /// engine treats this as absorption.
    #[error("degenerate decomposition: all weight on the {occupied:?} branch")]
    DegenerateDecomposition { occupied: Branch },
    #[error("invalid state: {0}")]
    Invalid(String),
}

/// Spin-basis parity of the detector down-count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Parity {
    Even,
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("EVEN"),
            Parity::Odd => f.write_str("ODD"),
        }
    }
}

/// Classifies a basis outcome by the number of down bits among `detectors`.
pub fn parity_classify(outcome: usize, detectors: Range<usize>) -> Parity {
    let mask = detectors.filter(|&i| i < usize::BITS as usize).fold(0usize, |m, i| m | (1 << i));
    if (outcome & mask).count_ones().is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Renders a basis index as a bitstring, particle 0 first.
pub fn format_bitstring(outcome: usize, n_particles: usize) -> String {
    (0..n_particles).map(|i| if outcome >> i & 1 == 0 { '0' } else { '1' }).collect()
}

/// Dense normalized state vector with per-particle basis tags.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Amplitude>,
    basis: Vec<Basis>,
}

impl PureState {
    /// Builds a state from raw amplitudes, which must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Amplitude>, basis: Vec<Basis>) -> Result<Self, StateError> {
        let n = basis.len();
        if n == 0 || n > DEFAULT_MAX_PARTICLES {
            return Err(StateError::Capacity {
                requested: n,
                max: DEFAULT_MAX_PARTICLES,
            });
        }
        if amplitudes.len() != 1 << n {
            return Err(StateError::Invalid(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(StateError::Invalid("non-finite amplitude".into()));
        }
        let state = PureState { amplitudes, basis };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::Invalid(format!("norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Like [`PureState::from_amplitudes`] but rescales to unit norm first.
    pub fn normalized(mut amplitudes: Vec<Amplitude>, basis: Vec<Basis>) -> Result<Self, StateError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(StateError::Invalid("cannot normalize a zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes, basis)
    }

    pub fn n_particles(&self) -> usize {
        self.basis.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &[Basis] {
        &self.basis
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Amplitude {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    fn check_index(&self, index: usize) -> Result<(), StateError> {
        if index >= self.n_particles() {
            return Err(StateError::IndexOutOfRange {
                index,
                n_particles: self.n_particles(),
            });
        }
        Ok(())
    }

    fn require_basis(&self, particle: usize, expected: Basis) -> Result<(), StateError> {
        let found = self.basis[particle];
        if found != expected {
            return Err(StateError::BasisMismatch { particle, expected, found });
        }
        Ok(())
    }

    /// Flips detector `detector` in every component where the subject is up.
    ///
    /// Both particles must be tagged with the X basis, since the correlating
    /// interaction is defined in that basis.
    pub fn apply_controlled_flip(&mut self, detector: usize) -> Result<(), StateError> {
        self.check_index(detector)?;
        if detector == 0 {
            return Err(StateError::IndexOutOfRange {
                index: 0,
                n_particles: self.n_particles(),
            });
        }
        self.require_basis(0, Basis::X)?;
        self.require_basis(detector, Basis::X)?;
        let bit = 1usize << detector;
        for index in 0..self.amplitudes.len() {
            // subject up and detector bit clear: swap with the partner once
            if index & 1 == 0 && index & bit == 0 {
                self.amplitudes.swap(index, index | bit);
            }
        }
        Ok(())
    }

    /// Rotates the listed particles between the X and Z bases.
    ///
    /// Uses `|x up> = (|z up> + |z down>)/sqrt2` and
    /// `|x down> = (|z up> - |z down>)/sqrt2`; the map is its own inverse so
    /// the same butterfly serves both directions.
    pub fn change_basis(&mut self, particles: &[usize]) -> Result<(), StateError> {
        for &p in particles {
            self.check_index(p)?;
        }
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for &p in particles {
            let bit = 1usize << p;
            for index in 0..self.amplitudes.len() {
                if index & bit == 0 {
                    let up = self.amplitudes[index];
                    let down = self.amplitudes[index | bit];
                    self.amplitudes[index] = (up + down) * scale;
                    self.amplitudes[index | bit] = (up - down) * scale;
                }
            }
            self.basis[p] = self.basis[p].flipped();
        }
        Ok(())
    }

    /// Rotates every particle tagged `from` into the other basis.
    pub fn rotate_all_from(&mut self, from: Basis) -> Result<(), StateError> {
        let particles: Vec<usize> = (0..self.n_particles()).filter(|&i| self.basis[i] == from).collect();
        self.change_basis(&particles)
    }

    /// Squared magnitudes of the amplitudes, indexed like the basis.
    pub fn born_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Inverse-CDF sample of a basis outcome for a uniform draw `u` in [0, 1).
    pub fn sample_outcome(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (index, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                acc += p;
                last_nonzero = index;
                if u < acc {
                    return index;
                }
            }
        }
        last_nonzero
    }

    /// Splits the support of the state by `interacting`.
    pub fn branch_decompose<F>(&self, interacting: F) -> Result<BranchDecomposition, StateError>
    where
        F: Fn(usize) -> bool,
    {
        let mut decomposition = BranchDecomposition {
            interacting: Vec::new(),
            noninteracting: Vec::new(),
            mass_interacting: 0.0,
            mass_noninteracting: 0.0,
        };
        let mut mass_i = 0.0;
        let mut mass_n = 0.0;
        for (index, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            if interacting(index) {
                decomposition.interacting.push(index);
                mass_i += p;
            } else {
                decomposition.noninteracting.push(index);
                mass_n += p;
            }
        }
        if mass_i == 0.0 {
            return Err(StateError::DegenerateDecomposition {
                occupied: Branch::Noninteracting,
            });
        }
        if mass_n == 0.0 {
            return Err(StateError::DegenerateDecomposition {
                occupied: Branch::Interacting,
            });
        }
        let total = mass_i + mass_n;
        decomposition.mass_interacting = mass_i / total;
        decomposition.mass_noninteracting = mass_n / total;
        Ok(decomposition)
    }

    /// Multiplies each branch by a real factor and renormalizes.
    pub(crate) fn rescale_branches(&mut self, decomposition: &BranchDecomposition, interacting: f64, noninteracting: f64) {
        apply_factor(&mut self.amplitudes, &decomposition.interacting, interacting);
        apply_factor(&mut self.amplitudes, &decomposition.noninteracting, noninteracting);
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 && norm != 1.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
    }
}

fn apply_factor(amplitudes: &mut [Amplitude], indices: &[usize], factor: f64) {
    for &i in indices {
        amplitudes[i] = if factor == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            amplitudes[i] * factor
        };
    }
}

/// Builds the subject-plus-detectors preparation state with the default bound.
pub fn make_initial_state(n_detectors: usize) -> Result<PureState, StateError> {
    make_initial_state_bounded(n_detectors, DEFAULT_MAX_PARTICLES)
}

/// Subject in `(|x up> + |x down>)/sqrt2`, every detector in `|x down>`.
pub fn make_initial_state_bounded(n_detectors: usize, max_particles: usize) -> Result<PureState, StateError> {
    let n = n_detectors + 1;
    let max = max_particles.min(DEFAULT_MAX_PARTICLES);
    if n > max {
        return Err(StateError::Capacity { requested: n, max });
    }
    let detectors_down = ((1usize << n) - 1) & !1;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amplitudes[detectors_down] = Complex64::new(h, 0.0);
    amplitudes[detectors_down | 1] = Complex64::new(h, 0.0);
    Ok(PureState {
        amplitudes,
        basis: vec![Basis::X; n],
    })
}

/// Binary partition of the support into interacting and noninteracting indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDecomposition {
    interacting: Vec<usize>,
    noninteracting: Vec<usize>,
    mass_interacting: f64,
    mass_noninteracting: f64,
}

impl BranchDecomposition {
    pub fn interacting_set(&self) -> &[usize] {
        &self.interacting
    }

    pub fn noninteracting_set(&self) -> &[usize] {
        &self.noninteracting
    }

    pub fn mass_interacting(&self) -> f64 {
        self.mass_interacting
    }

    pub fn mass_noninteracting(&self) -> f64 {
        self.mass_noninteracting
    }
}
