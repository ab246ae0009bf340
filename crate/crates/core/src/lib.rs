//! Monte Carlo simulator for stochastic amplitude-transfer collapse.
//!
//! - [`state`]: dense pure states of two-level registers, basis changes and
//!   branch decompositions.
//! - [`collapse`]: the `±δ` amplitude-transfer walk and its interleaving with
//!   unitary evolution.
//! - [`experiments`]: detector-parity, singlet no-signaling, coupled-eraser
//!   and bare-walk harnesses.
//! - [`stats`]: estimators and intervals.
//! - [`io`]: run manifests, command-line parsing and result files.

pub mod collapse;
pub mod experiments;
pub mod io;
pub mod rng;
pub mod state;
pub mod stats;

pub use collapse::{CollapseConfig, CollapseError, SequencingMode};
pub use experiments::{Executor, ExperimentError};
pub use state::{Basis, Parity, PureState, StateError};
