//! C ABI for the `mjhmc` library.
//!
//! Objects are exposed as opaque handles created by `*_new` functions and
//! released by the matching `*_free`. Fallible calls return an
//! [`MjhmcStatus`]; constructors return null on failure. In both cases the
//! message is available from [`mjhmc_last_error_message`] on the same
//! thread. Panics never cross the boundary.

use mjhmc::diagnostics::{fit_decay, AutocorrSeries};
use mjhmc::energy::{EnergyFunction, Gaussian, RoughWell, RoughWellParams};
use mjhmc::hmc::{HmcChain, HmcConfig};
use mjhmc::ladder::{balance_check, build_mjhmc_rate_matrix, ladder_chains, spectral_gap, Ladder};
use mjhmc::phase::PhaseState;
use mjhmc::rng::{derive_seed, derived};
use mjhmc::sampler::{MjhmcChain, SamplerConfig, TransitionKind};
use mjhmc::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MjhmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Integration blew up, a fit failed, or an eigensolve did not converge.
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MjhmcTransition {
    Leapfrog = 0,
    Flip = 1,
    Randomize = 2,
}

/// One jump of an MJHMC chain. The state occupied during the holding time
/// is written separately by [`mjhmc_chain_step`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MjhmcJump {
    pub holding_time: f64,
    pub transition: MjhmcTransition,
    pub cumulative_gradient_evals: u64,
}

/// Target distribution handle.
pub struct MjhmcEnergy {
    inner: Arc<dyn EnergyFunction>,
}

/// MJHMC chain handle.
pub struct MjhmcChainHandle {
    inner: MjhmcChain<Arc<dyn EnergyFunction>>,
}

/// HMC control chain handle.
pub struct MjhmcHmcHandle {
    inner: HmcChain<Arc<dyn EnergyFunction>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MjhmcStatus {
    if e.is_numerical() {
        MjhmcStatus::Numerical
    } else {
        MjhmcStatus::InvalidArgument
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    /// A chain whose previous step failed.
    Stopped,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> MjhmcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MjhmcStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MjhmcStatus::NullPointer
        }
        Ok(Err(Failure::Stopped)) => {
            set_error("chain stopped after a failed step");
            MjhmcStatus::Numerical
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            MjhmcStatus::Panic
        }
    }
}

fn guard_new<T, F: FnOnce() -> FfiResult<T>>(f: F) -> *mut T {
    let mut out = None;
    let status = guard(|| {
        out = Some(f()?);
        Ok(())
    });
    match (status, out) {
        (MjhmcStatus::Ok, Some(v)) => Box::into_raw(Box::new(v)),
        _ => ptr::null_mut(),
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> FfiResult<()> {
    if dst.len() != src.len() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            got: dst.len(),
        }
        .into());
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Copies the last error message on this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mjhmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Two-dimensional rough well.
#[no_mangle]
pub extern "C" fn mjhmc_energy_rough_well(sigma1: f64, sigma2: f64) -> *mut MjhmcEnergy {
    guard_new(|| {
        let ef = RoughWell::new(RoughWellParams::new(sigma1, sigma2)?)?;
        Ok(MjhmcEnergy { inner: Arc::new(ef) })
    })
}

/// Zero-mean Gaussian with diagonal precision.
///
/// # Safety
/// `precision` must point to `dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_energy_gaussian(precision: *const f64, dim: usize) -> *mut MjhmcEnergy {
    guard_new(|| {
        let p = slice(precision, dim, "precision")?;
        Ok(MjhmcEnergy {
            inner: Arc::new(Gaussian::new(p.to_vec())?),
        })
    })
}

/// # Safety
/// `energy` must be null or a handle from an `mjhmc_energy_*` constructor
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_energy_free(energy: *mut MjhmcEnergy) {
    if !energy.is_null() {
        drop(Box::from_raw(energy));
    }
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `energy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_energy_dim(energy: *const MjhmcEnergy) -> usize {
    energy.as_ref().map_or(0, |e| e.inner.dim())
}

/// Energy at `x` and, when `grad` is non-null, its gradient.
///
/// # Safety
/// `x` and `grad` (if non-null) must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_energy_eval(
    energy: *const MjhmcEnergy,
    x: *const f64,
    len: usize,
    out_energy: *mut f64,
    grad: *mut f64,
) -> MjhmcStatus {
    guard(|| {
        let ef = &handle(energy, "energy")?.inner;
        let x = slice(x, len, "x")?;
        let e = ef.energy(x)?;
        *out(out_energy, "out_energy")? = e;
        if !grad.is_null() {
            let g = ef.gradient(x)?;
            copy_into(slice_mut(grad, len, "grad")?, &g)?;
        }
        Ok(())
    })
}

/// Starts an MJHMC chain at position `x0` with momentum drawn from `seed`.
/// The energy handle may be freed afterwards.
///
/// # Safety
/// `energy` must be a live handle and `x0` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_chain_new(
    energy: *const MjhmcEnergy,
    epsilon: f64,
    steps: usize,
    beta: f64,
    seed: u64,
    x0: *const f64,
    dim: usize,
) -> *mut MjhmcChainHandle {
    guard_new(|| {
        let ef = handle(energy, "energy")?.inner.clone();
        let x0 = slice(x0, dim, "x0")?;
        let init = PhaseState::with_random_momentum(x0.to_vec(), &mut derived(seed, &[0]))?;
        let config = SamplerConfig::new(epsilon, steps, beta, 1, derive_seed(seed, &[1]))?;
        Ok(MjhmcChainHandle {
            inner: MjhmcChain::new(config, ef, init)?,
        })
    })
}

/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_chain_free(chain: *mut MjhmcChainHandle) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Advances one jump. The position held during the jump's holding time
/// is written to `x` when it is non-null.
///
/// # Safety
/// `chain` must be a live handle, `jump` writable, and `x` null or `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_chain_step(
    chain: *mut MjhmcChainHandle,
    jump: *mut MjhmcJump,
    x: *mut f64,
    len: usize,
) -> MjhmcStatus {
    guard(|| {
        let chain = out(chain, "chain")?;
        let jump = out(jump, "jump")?;
        let s = chain.inner.step()?;
        if !x.is_null() {
            copy_into(slice_mut(x, len, "x")?, &s.state.x)?;
        }
        *jump = MjhmcJump {
            holding_time: s.holding_time,
            transition: match s.transition_out {
                TransitionKind::L => MjhmcTransition::Leapfrog,
                TransitionKind::F => MjhmcTransition::Flip,
                TransitionKind::R => MjhmcTransition::Randomize,
            },
            cumulative_gradient_evals: s.cumulative_gradient_evals,
        };
        Ok(())
    })
}

/// Current position (the state the next jump leaves from).
///
/// # Safety
/// `chain` must be a live handle and `x` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_chain_position(
    chain: *const MjhmcChainHandle,
    x: *mut f64,
    len: usize,
) -> MjhmcStatus {
    guard(|| {
        let chain = handle(chain, "chain")?;
        let cache = chain.inner.cache().ok_or(Failure::Stopped)?;
        copy_into(slice_mut(x, len, "x")?, &cache.current.state.x)
    })
}

/// Gradient evaluations spent so far, 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_chain_gradient_evals(chain: *const MjhmcChainHandle) -> u64 {
    chain.as_ref().map_or(0, |c| c.inner.gradient_evals())
}

/// Starts an HMC control chain; `beta` is the per-step probability of a
/// full momentum redraw.
///
/// # Safety
/// As [`mjhmc_chain_new`].
#[no_mangle]
pub unsafe extern "C" fn mjhmc_hmc_new(
    energy: *const MjhmcEnergy,
    epsilon: f64,
    steps: usize,
    beta: f64,
    seed: u64,
    x0: *const f64,
    dim: usize,
) -> *mut MjhmcHmcHandle {
    guard_new(|| {
        let ef = handle(energy, "energy")?.inner.clone();
        let x0 = slice(x0, dim, "x0")?;
        let init = PhaseState::with_random_momentum(x0.to_vec(), &mut derived(seed, &[0]))?;
        let config = HmcConfig::new(epsilon, steps, beta, 1, derive_seed(seed, &[1]))?;
        Ok(MjhmcHmcHandle {
            inner: HmcChain::new(config, ef, init)?,
        })
    })
}

/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_hmc_free(chain: *mut MjhmcHmcHandle) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// One HMC step. `accepted` and `x` may be null.
///
/// # Safety
/// `chain` must be a live handle; `x` null or `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_hmc_step(
    chain: *mut MjhmcHmcHandle,
    accepted: *mut bool,
    x: *mut f64,
    len: usize,
) -> MjhmcStatus {
    guard(|| {
        let chain = out(chain, "chain")?;
        let s = chain.inner.step()?;
        if let Some(a) = accepted.as_mut() {
            *a = s.accepted;
        }
        if !x.is_null() {
            copy_into(slice_mut(x, len, "x")?, &s.state.x)?;
        }
        Ok(())
    })
}

/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_hmc_gradient_evals(chain: *const MjhmcHmcHandle) -> u64 {
    chain.as_ref().map_or(0, |c| c.inner.gradient_evals())
}

/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_hmc_acceptance_rate(chain: *const MjhmcHmcHandle) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| c.inner.acceptance_rate())
}

/// Spectral gaps of the MJHMC jump chain and the HMC control on the ring
/// ladder with rung energies `energies[0..k]`, after mixing in a
/// self-transition probability `holding` (0 for the raw chains).
///
/// # Safety
/// `energies` must hold `k` doubles; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_ladder_gaps(
    energies: *const f64,
    k: usize,
    holding: f64,
    out_mjhmc: *mut f64,
    out_hmc: *mut f64,
) -> MjhmcStatus {
    guard(|| {
        let ladder = Ladder::new(slice(energies, k, "energies")?.to_vec())?;
        let (mj, hmc) = ladder_chains(&ladder)?;
        let (mj, hmc) = if holding > 0.0 {
            (mj.lazy(holding)?, hmc.lazy(holding)?)
        } else {
            (mj, hmc)
        };
        let a = spectral_gap(&mj)?;
        let b = spectral_gap(&hmc)?;
        *out(out_mjhmc, "out_mjhmc")? = a;
        *out(out_hmc, "out_hmc")? = b;
        Ok(())
    })
}

/// Stationarity residual `max|G pi| / max pi` of the MJHMC generator.
///
/// # Safety
/// `energies` must hold `k` doubles; `out_residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_ladder_balance_residual(
    energies: *const f64,
    k: usize,
    out_residual: *mut f64,
) -> MjhmcStatus {
    guard(|| {
        let ladder = Ladder::new(slice(energies, k, "energies")?.to_vec())?;
        let rates = build_mjhmc_rate_matrix(&ladder)?;
        *out(out_residual, "out_residual")? = balance_check(&rates, &ladder);
        Ok(())
    })
}

/// Fits `C(n) = Re[exp(r n)]` to `n` points; writes `r`'s real and
/// imaginary parts.
///
/// # Safety
/// `lags` and `values` must hold `n` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjhmc_fit_decay(
    lags: *const f64,
    values: *const f64,
    n: usize,
    out_real: *mut f64,
    out_imag: *mut f64,
) -> MjhmcStatus {
    guard(|| {
        let series = AutocorrSeries::new(slice(lags, n, "lags")?.to_vec(), slice(values, n, "values")?.to_vec())?;
        let fit = fit_decay(&series)?;
        *out(out_real, "out_real")? = fit.r_real;
        *out(out_imag, "out_imag")? = fit.r_imag;
        Ok(())
    })
}
