//! C ABI over `collapse_lab`.
//!
//! Every function returns a [`ClStatus`]. On failure a message is available
//! from [`cl_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use collapse_lab::collapse::{CollapseConfig, CollapseError, SequencingMode};
use collapse_lab::experiments::bell::run_bell_parity;
use collapse_lab::experiments::emzi::{emzi_alternative_cross_fraction, emzi_analytic_cross_fraction, run_emzi_mc};
use collapse_lab::experiments::epr::compare_no_signaling;
use collapse_lab::experiments::walk::{expected_collapse_steps, run_walk_experiment};
use collapse_lab::experiments::{Executor, ExperimentError};
use collapse_lab::state::{make_initial_state, PureState, StateError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Capacity = 4,
    BasisMismatch = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

struct Failure(ClStatus, String);

impl From<StateError> for Failure {
    fn from(e: StateError) -> Self {
        let status = match e {
            StateError::Capacity { .. } => ClStatus::Capacity,
            StateError::BasisMismatch { .. } => ClStatus::BasisMismatch,
            StateError::IndexOutOfRange { .. } => ClStatus::InvalidArgument,
            StateError::DegenerateDecomposition { .. } | StateError::Invalid(_) => ClStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

impl From<CollapseError> for Failure {
    fn from(e: CollapseError) -> Self {
        match e {
            CollapseError::State(s) => s.into(),
            CollapseError::InvalidDelta(_) | CollapseError::InvalidMass(_) | CollapseError::FrozenWalk => {
                Failure(ClStatus::Domain, e.to_string())
            }
            _ => Failure(ClStatus::Internal, e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidParameter(_) => Failure(ClStatus::Domain, e.to_string()),
            ExperimentError::Collapse(c) => c.into(),
            ExperimentError::State(s) => s.into(),
            _ => Failure(ClStatus::Internal, e.to_string()),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard<F>(body: F) -> ClStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            ClStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("panic inside collapse-lab");
            ClStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(ClStatus::NullPointer, "null pointer argument".into())
}

/// Writes `value` through `out`, failing on null.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

/// Last error message on this thread; empty after a successful call. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque run configuration: step size, seed, sequencing and worker count.
pub struct ClConfig {
    config: CollapseConfig,
    exec: Executor,
}

/// Creates a configuration. `workers == 0` uses the default thread pool.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cl_config_new(delta: f64, master_seed: u64, same_s: bool, workers: usize, out: *mut *mut ClConfig) -> ClStatus {
    guard(|| {
        let mode = if same_s {
            SequencingMode::ForcedSameS
        } else {
            SequencingMode::DistinctS
        };
        let config = CollapseConfig::new(delta)?.with_seed(master_seed).with_sequencing(mode);
        let exec = if workers == 0 {
            Executor::default()
        } else {
            Executor::with_workers(workers)
        };
        let handle = Box::into_raw(Box::new(ClConfig { config, exec }));
        if out.is_null() {
            drop(Box::from_raw(handle));
            return Err(null());
        }
        out.write(handle);
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from [`cl_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_config_free(config: *mut ClConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn config_ref<'a>(config: *const ClConfig) -> Result<&'a ClConfig, Failure> {
    config.as_ref().ok_or_else(null)
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClBellReport {
    pub n_detectors: usize,
    pub trials: u64,
    pub delta: f64,
    pub count_consistent: u64,
    pub count_collapse_signature: u64,
    pub r_sup: f64,
    pub collapse_fraction: f64,
    pub r_sup_lo: f64,
    pub r_sup_hi: f64,
    pub absorbed_trials: u64,
}

/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_run_bell_parity(config: *const ClConfig, n_detectors: usize, trials: u64, out: *mut ClBellReport) -> ClStatus {
    guard(|| {
        let c = config_ref(config)?;
        let r = run_bell_parity(n_detectors, trials, &c.config, &c.exec)?;
        write_out(
            out,
            ClBellReport {
                n_detectors: r.n_detectors,
                trials: r.trials,
                delta: r.delta,
                count_consistent: r.count_consistent,
                count_collapse_signature: r.count_collapse_signature,
                r_sup: r.r_sup,
                collapse_fraction: r.collapse_fraction,
                r_sup_lo: r.confidence_interval.0,
                r_sup_hi: r.confidence_interval.1,
                absorbed_trials: r.absorbed_trials,
            },
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClWalkReport {
    pub p0: f64,
    pub delta: f64,
    pub trials: u64,
    pub absorbed_interacting: u64,
    pub absorption: f64,
    pub absorption_lo: f64,
    pub absorption_hi: f64,
    pub mean_steps: f64,
    pub steps_se: f64,
    pub expected_steps: f64,
}

/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_run_walk(config: *const ClConfig, p0: f64, trials: u64, out: *mut ClWalkReport) -> ClStatus {
    guard(|| {
        let c = config_ref(config)?;
        let r = run_walk_experiment(p0, trials, &c.config, &c.exec)?;
        write_out(
            out,
            ClWalkReport {
                p0: r.p0,
                delta: r.delta,
                trials: r.trials,
                absorbed_interacting: r.absorbed_interacting,
                absorption: r.absorption.point,
                absorption_lo: r.absorption.interval_lo,
                absorption_hi: r.absorption.interval_hi,
                mean_steps: r.mean_steps,
                steps_se: r.steps_se,
                expected_steps: r.expected_steps,
            },
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClEmziReport {
    pub trials: u64,
    pub r_branch: f64,
    pub delta: f64,
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
    pub sampled_cross_fraction: f64,
    pub sampled_cross_fraction_se: f64,
}

/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_run_emzi(config: *const ClConfig, r_branch: f64, trials: u64, out: *mut ClEmziReport) -> ClStatus {
    guard(|| {
        let c = config_ref(config)?;
        let r = run_emzi_mc(r_branch, trials, &c.config, &c.exec)?;
        write_out(
            out,
            ClEmziReport {
                trials: r.trials,
                r_branch: r.r_branch,
                delta: r.delta,
                p_ss: r.p_ss,
                p_aa: r.p_aa,
                p_sa: r.p_sa,
                p_as: r.p_as,
                p_noninteracting: r.p_noninteracting,
                total_interacting: r.total_interacting,
                cross_fraction: r.cross_fraction,
                cross_fraction_se: r.cross_fraction_se,
                analytic_cross_fraction: r.analytic_cross_fraction,
                alternative_cross_fraction: r.alternative_cross_fraction,
                sampled_cross_fraction: r.sampled_cross_fraction,
                sampled_cross_fraction_se: r.sampled_cross_fraction_se,
            },
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClEprReport {
    pub trials: u64,
    pub chain_len: usize,
    pub b_up_unmeasured: u64,
    pub b_up_measured: u64,
    pub anticorrelated_measured: u64,
    pub tv_distance: f64,
    pub threshold: f64,
}

/// Runs the singlet pair with and without the `a`-side chain.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_run_epr(config: *const ClConfig, chain_len: usize, trials: u64, out: *mut ClEprReport) -> ClStatus {
    guard(|| {
        let c = config_ref(config)?;
        let r = compare_no_signaling(trials, &c.config, chain_len, &c.exec)?;
        write_out(
            out,
            ClEprReport {
                trials: r.measured.trials,
                chain_len,
                b_up_unmeasured: r.unmeasured.b_up,
                b_up_measured: r.measured.b_up,
                anticorrelated_measured: r.measured.anticorrelated,
                tv_distance: r.tv_distance,
                threshold: r.threshold,
            },
        )
    })
}

/// Closed-form cross fraction and its alternative normalization.
///
/// # Safety
/// Both output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cl_emzi_analytic(r_branch: f64, cross_fraction: *mut f64, alternative: *mut f64) -> ClStatus {
    guard(|| {
        write_out(cross_fraction, emzi_analytic_cross_fraction(r_branch)?)?;
        write_out(alternative, emzi_alternative_cross_fraction(r_branch)?)
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_expected_collapse_steps(p0: f64, delta: f64, out: *mut f64) -> ClStatus {
    guard(|| write_out(out, expected_collapse_steps(p0, delta)?))
}

/// Opaque state vector.
pub struct ClState {
    state: PureState,
}

/// Subject plus `n_detectors` detectors in the correlated initial state.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cl_state_initial(n_detectors: usize, out: *mut *mut ClState) -> ClStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let state = make_initial_state(n_detectors)?;
        out.write(Box::into_raw(Box::new(ClState { state })));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from [`cl_state_initial`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_state_free(state: *mut ClState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of particles, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_state_n_particles(state: *const ClState) -> usize {
    state.as_ref().map_or(0, |s| s.state.n_particles())
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cl_state_controlled_flip(state: *mut ClState, detector: usize) -> ClStatus {
    guard(|| {
        let s = state.as_mut().ok_or_else(null)?;
        s.state.apply_controlled_flip(detector)?;
        Ok(())
    })
}

/// Toggles the basis of each listed particle.
///
/// # Safety
/// `state` must be a live handle; `particles` must point to `len` values
/// (it may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn cl_state_change_basis(state: *mut ClState, particles: *const usize, len: usize) -> ClStatus {
    guard(|| {
        let s = state.as_mut().ok_or_else(null)?;
        let list = if len == 0 {
            &[][..]
        } else if particles.is_null() {
            return Err(null());
        } else {
            std::slice::from_raw_parts(particles, len)
        };
        s.state.change_basis(list)?;
        Ok(())
    })
}

/// Copies the `2^n` Born probabilities into `out`.
///
/// # Safety
/// `state` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cl_state_born_probabilities(state: *const ClState, out: *mut f64, len: usize) -> ClStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let probs = s.state.born_probabilities();
        if len < probs.len() {
            return Err(Failure(
                ClStatus::BufferTooSmall,
                format!("need {} entries, got {len}", probs.len()),
            ));
        }
        std::ptr::copy_nonoverlapping(probs.as_ptr(), out, probs.len());
        Ok(())
    })
}
