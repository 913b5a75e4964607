//! C interface to the eigenseries solver.
//!
//! Hamiltonians and spectra are opaque handles created and released by this
//! library. Every function returns an [`EsStatus`]; on failure a message is
//! available from [`es_last_error_message`] on the same thread.
//!
//! Matrices cross the boundary as row-major `double` arrays of length
//! `dim * dim`, with real and imaginary parts in separate arrays. A null
//! imaginary pointer means "all zeros" on input.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eigenseries::error::Error;
use eigenseries::evolution::{propagate, EvolveConfig};
use eigenseries::hamiltonian::{generate_model, split, HermitianMatrix, ModelSpec, SplitHamiltonian};
use eigenseries::kernel::kernel_resolvent;
use eigenseries::linalg::{CMatrix, C64};
use eigenseries::oracle::dense_eig;
use eigenseries::solver::{solve_spectrum, Eigenpair, KernelMode, QForm, SolveConfig, SolveMethod};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    NotHermitian = -3,
    Degenerate = -4,
    Singular = -5,
    NoRealRoot = -6,
    NotConverged = -7,
    RegimeExceeded = -8,
    Panic = -99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsModel {
    TwoLevel = 0,
    Chain = 1,
    BandedRandom = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsMethod {
    FixedPoint = 0,
    SeriesEq19 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsKernel {
    Resolvent = 0,
    Series = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsQForm {
    Closed = 0,
    Series = 1,
}

/// Solver settings; fill with [`es_solve_options_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EsSolveOptions {
    pub root_tol: f64,
    pub gap_tol: f64,
    pub continuation_steps: u32,
    /// Path order of the series forms.
    pub series_order: u32,
    pub eq19_max_m: u32,
    pub method: EsMethod,
    pub kernel: EsKernel,
    pub q_form: EsQForm,
    pub jobs: u32,
}

/// Opaque Hamiltonian handle.
pub struct EsHamiltonian {
    matrix: HermitianMatrix,
    split: SplitHamiltonian,
}

/// Opaque spectrum handle.
pub struct EsSpectrum {
    dim: usize,
    levels: Vec<Result<Eigenpair, Error>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EsStatus {
    match e {
        Error::NotHermitian { .. } => EsStatus::NotHermitian,
        Error::Degenerate { .. } => EsStatus::Degenerate,
        Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => {
            EsStatus::InvalidArgument
        }
        Error::PoleHit { .. } | Error::SingularSolve { .. } => EsStatus::Singular,
        Error::NoRealRoot { .. } => EsStatus::NoRealRoot,
        Error::NotConverged { .. } | Error::NoConvergence { .. } => EsStatus::NotConverged,
        Error::RegimeExceeded(_) => EsStatus::RegimeExceeded,
    }
}

struct Failure(EsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(EsStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EsStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            EsStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn es_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn es_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults matching the command-line tool.
///
/// # Safety
/// `out` must be null or point to writable memory for one `EsSolveOptions`.
#[no_mangle]
pub unsafe extern "C" fn es_solve_options_default(out: *mut EsSolveOptions) -> EsStatus {
    guard(|| {
        let d = SolveConfig::default();
        write(
            out,
            EsSolveOptions {
                root_tol: d.root_tol,
                gap_tol: d.gap_tol,
                continuation_steps: d.continuation_steps as u32,
                series_order: d.series_order as u32,
                eq19_max_m: d.eq19_max_m as u32,
                method: EsMethod::FixedPoint,
                kernel: EsKernel::Resolvent,
                q_form: EsQForm::Closed,
                jobs: 1,
            },
            "out",
        )
    })
}

fn boxed(matrix: HermitianMatrix) -> *mut EsHamiltonian {
    let split = split(&matrix);
    Box::into_raw(Box::new(EsHamiltonian { matrix, split }))
}

/// Builds a Hamiltonian from row-major parts. `im` may be null. With
/// `symmetrize`, `(A + A†)/2` is used instead of rejecting asymmetry.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim * dim` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_hamiltonian_from_parts(
    dim: usize,
    re: *const f64,
    im: *const f64,
    symmetrize: bool,
    out: *mut *mut EsHamiltonian,
) -> EsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let n2 = dim.checked_mul(dim).ok_or_else(|| invalid("dim too large"))?;
        let re = slice(re, n2, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, n2, "im")?) };
        let m = CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(re[i * dim + j], im.map_or(0.0, |v| v[i * dim + j]))
        });
        let h = if symmetrize {
            HermitianMatrix::symmetrized(m)?
        } else {
            HermitianMatrix::new(m)?
        };
        out.write(boxed(h));
        Ok(())
    })
}

/// Builds one of the generated model Hamiltonians. `seed` is used by
/// `ES_MODEL_BANDED_RANDOM` only.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_hamiltonian_from_model(
    model: EsModel,
    dim: usize,
    delta: f64,
    lambda: f64,
    seed: u64,
    out: *mut *mut EsHamiltonian,
) -> EsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = match model {
            EsModel::TwoLevel => {
                if dim != 2 {
                    return Err(invalid("two_level requires dim = 2"));
                }
                ModelSpec::two_level(delta, lambda)
            }
            EsModel::Chain => ModelSpec::chain(dim, delta, lambda),
            EsModel::BandedRandom => ModelSpec {
                gap: delta,
                ..ModelSpec::banded_random(dim, lambda, seed)
            },
        };
        out.write(boxed(generate_model(&spec)?));
        Ok(())
    })
}

/// Releases a Hamiltonian; null is ignored.
///
/// # Safety
/// `h` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_hamiltonian_free(h: *mut EsHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_hamiltonian_dim(h: *const EsHamiltonian, out: *mut usize) -> EsStatus {
    guard(|| write(out, handle(h, "h")?.matrix.dim(), "out"))
}

fn solve_config(o: &EsSolveOptions) -> SolveConfig {
    SolveConfig {
        root_tol: o.root_tol,
        gap_tol: o.gap_tol,
        continuation_steps: o.continuation_steps as usize,
        series_order: o.series_order as usize,
        eq19_max_m: o.eq19_max_m as usize,
        method: match o.method {
            EsMethod::FixedPoint => SolveMethod::FixedPoint,
            EsMethod::SeriesEq19 => SolveMethod::SeriesEq19,
        },
        kernel: match o.kernel {
            EsKernel::Resolvent => KernelMode::Resolvent,
            EsKernel::Series => KernelMode::Series,
        },
        q_form: match o.q_form {
            EsQForm::Closed => QForm::Closed,
            EsQForm::Series => QForm::Series,
        },
        jobs: o.jobs.max(1) as usize,
        ..SolveConfig::default()
    }
}

/// Solves every level. Returns `ES_STATUS_OK` when the spectrum was
/// attempted; individual levels may still have failed, see
/// [`es_spectrum_level_status`]. `opts` may be null for defaults.
///
/// # Safety
/// `h` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_solve_spectrum(
    h: *const EsHamiltonian,
    opts: *const EsSolveOptions,
    out: *mut *mut EsSpectrum,
) -> EsStatus {
    guard(|| {
        let h = handle(h, "h")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = opts.as_ref().map_or_else(SolveConfig::default, solve_config);
        let spectrum = solve_spectrum(&h.split, &cfg)?;
        out.write(Box::into_raw(Box::new(EsSpectrum {
            dim: h.split.dim(),
            levels: spectrum.levels,
        })));
        Ok(())
    })
}

/// Releases a spectrum; null is ignored.
///
/// # Safety
/// `sp` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_free(sp: *mut EsSpectrum) {
    if !sp.is_null() {
        drop(Box::from_raw(sp));
    }
}

/// # Safety
/// `sp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_len(sp: *const EsSpectrum, out: *mut usize) -> EsStatus {
    guard(|| write(out, handle(sp, "sp")?.levels.len(), "out"))
}

unsafe fn level<'a>(sp: *const EsSpectrum, gamma: usize) -> Result<&'a Eigenpair, Failure> {
    let sp = handle(sp, "sp")?;
    match sp.levels.get(gamma) {
        None => Err(invalid(format!("level {gamma} out of range for dimension {}", sp.dim))),
        Some(Ok(p)) => Ok(p),
        Some(Err(e)) => Err(e.clone().into()),
    }
}

/// Status of the solve for level `gamma`; the message is available from
/// [`es_last_error_message`] when it is not `ES_STATUS_OK`.
///
/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_level_status(sp: *const EsSpectrum, gamma: usize) -> EsStatus {
    guard(|| level(sp, gamma).map(|_| ()))
}

/// # Safety
/// `sp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_energy(sp: *const EsSpectrum, gamma: usize, out: *mut f64) -> EsStatus {
    guard(|| write(out, level(sp, gamma)?.energy, "out"))
}

/// Eigen-residual `‖Hv − Ẽv‖₂/‖v‖₂` of level `gamma`.
///
/// # Safety
/// `sp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_residual(sp: *const EsSpectrum, gamma: usize, out: *mut f64) -> EsStatus {
    guard(|| write(out, level(sp, gamma)?.residual, "out"))
}

/// Eigenvector amplitudes of level `gamma`, with amplitude 1 at `gamma`.
///
/// # Safety
/// `re_out` and `im_out` must each hold `len` doubles; `len` must equal the
/// dimension.
#[no_mangle]
pub unsafe extern "C" fn es_spectrum_amplitudes(
    sp: *const EsSpectrum,
    gamma: usize,
    re_out: *mut f64,
    im_out: *mut f64,
    len: usize,
) -> EsStatus {
    guard(|| {
        let p = level(sp, gamma)?;
        if len != p.amplitudes.len() {
            return Err(invalid(format!("len {len} does not match dimension {}", p.amplitudes.len())));
        }
        let re = slice_mut(re_out, len, "re_out")?;
        let im = slice_mut(im_out, len, "im_out")?;
        for (k, a) in p.amplitudes.iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// `ψ(t)` from the order-`order` expansion. The state is written even when
/// the status is `ES_STATUS_NOT_CONVERGED` (last order above 1e-10).
///
/// # Safety
/// `psi_re` (and `psi_im` if non-null), `out_re`, `out_im` must hold `len`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn es_propagate(
    h: *const EsHamiltonian,
    psi_re: *const f64,
    psi_im: *const f64,
    len: usize,
    t: f64,
    order: u32,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EsStatus {
    guard(|| {
        let h = handle(h, "h")?;
        let re = slice(psi_re, len, "psi_re")?;
        let im = if psi_im.is_null() { None } else { Some(slice(psi_im, len, "psi_im")?) };
        let psi0: Vec<C64> = (0..len).map(|k| C64::new(re[k], im.map_or(0.0, |v| v[k]))).collect();
        let cfg = EvolveConfig {
            order: order as usize,
            ..EvolveConfig::default()
        };
        let p = propagate(&h.split, &psi0, t, &cfg)?;
        let ore = slice_mut(out_re, len, "out_re")?;
        let oim = slice_mut(out_im, len, "out_im")?;
        for (k, v) in p.psi.iter().enumerate() {
            ore[k] = v.re;
            oim[k] = v.im;
        }
        if p.converged {
            Ok(())
        } else {
            Err(Failure(
                EsStatus::NotConverged,
                format!("order {order} still contributes {:e}", p.last_contribution),
            ))
        }
    })
}

/// Ascending eigenvalues from dense diagonalization.
///
/// # Safety
/// `out` must hold `len` doubles; `len` must equal the dimension.
#[no_mangle]
pub unsafe extern "C" fn es_oracle_eigenvalues(h: *const EsHamiltonian, out: *mut f64, len: usize) -> EsStatus {
    guard(|| {
        let h = handle(h, "h")?;
        if len != h.matrix.dim() {
            return Err(invalid(format!("len {len} does not match dimension {}", h.matrix.dim())));
        }
        let eig = dense_eig(&h.matrix)?;
        slice_mut(out, len, "out")?.copy_from_slice(&eig.values);
        Ok(())
    })
}

/// Kernel `R_γ(z)` in closed resolvent form.
///
/// # Safety
/// `h` must be a live handle; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_kernel_resolvent(
    h: *const EsHamiltonian,
    gamma: usize,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EsStatus {
    guard(|| {
        let h = handle(h, "h")?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out"));
        }
        let v = kernel_resolvent(&h.split, gamma, C64::new(z_re, z_im))?.value;
        out_re.write(v.re);
        out_im.write(v.im);
        Ok(())
    })
}
