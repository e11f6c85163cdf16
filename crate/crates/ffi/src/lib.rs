//! C ABI for `hsdisp`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`HsStatus`]; on failure a description is available from
//! [`hs_last_error_message`] on the same thread. Panics never unwind into C:
//! they are caught and reported as [`HsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hsdisp::dispersion::{density_for, dispersion_phs, QuadSpec};
use hsdisp::material::{first_corrector, TwoPhaseProfile};
use hsdisp::minimizer::minimum_from_packing;
use hsdisp::packing::{
    greedy_apollonian, load_packing, save_packing, BallPacking, SearchSpec, StopCriterion,
};
use hsdisp::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Degenerate = 3,
    InfeasibleRadii = 4,
    Parse = 5,
    PackingInvariant = 6,
    BudgetExceeded = 7,
    Numerical = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Two-phase core–coating profile.
pub struct HsProfile(TwoPhaseProfile);

/// Disjoint ball packing of the flat torus.
pub struct HsPacking(BallPacking);

/// Equivalent conductivity and first-corrector coefficients.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HsFirstCorrector {
    pub m: f64,
    pub b1t: f64,
    pub b2t: f64,
    pub ct: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::InvalidInput(_) | Error::Constraint { .. } | Error::MixedDimension { .. } => {
            HsStatus::InvalidInput
        }
        Error::Degenerate(_) => HsStatus::Degenerate,
        Error::InfeasibleRadii { .. } => HsStatus::InfeasibleRadii,
        Error::Parse { .. } | Error::Json(_) => HsStatus::Parse,
        Error::PackingInvariant(_) => HsStatus::PackingInvariant,
        Error::SearchBudgetExceeded { .. } | Error::CoverageComplete { .. } => {
            HsStatus::BudgetExceeded
        }
        Error::Numerical(_) | Error::QuadratureNonconvergence { .. } => HsStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => HsStatus::Io,
    }
}

struct Failure(HsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording errors and converting panics.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> HsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HsStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HsStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HsStatus::InvalidInput, "path is not valid UTF-8".into()))
}

/// Message for the last failed call on this thread, or null. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn hs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a profile; `*out` receives a handle to free with `hs_profile_free`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_profile_new(
    alpha: f64,
    beta: f64,
    theta: f64,
    dim: u32,
    out: *mut *mut HsProfile,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = TwoPhaseProfile::new(alpha, beta, theta, dim as usize)?;
        out.write(Box::into_raw(Box::new(HsProfile(p))));
        Ok(())
    })
}

/// # Safety
/// `profile` must be null or a handle from `hs_profile_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_profile_free(profile: *mut HsProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Equivalent conductivity m and the radial profile coefficients.
///
/// # Safety
/// `profile` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_homogenize(
    profile: *const HsProfile,
    out: *mut HsFirstCorrector,
) -> HsStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        let fc = first_corrector(&p.0)?;
        write(
            out,
            HsFirstCorrector {
                m: fc.m,
                b1t: fc.b1t,
                b2t: fc.b2t,
                ct: fc.ct,
            },
        )
    })
}

/// Per-ball dispersion density J of the profile.
///
/// # Safety
/// `profile` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_dispersion_density(
    profile: *const HsProfile,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        write(out, density_for(&p.0, &QuadSpec::default())?.j_value)
    })
}

/// Dispersion coefficient d_PHS of `packing` filled with copies of `profile`.
///
/// # Safety
/// Both handles must be live and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_dispersion(
    profile: *const HsProfile,
    packing: *const HsPacking,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        let k = packing.as_ref().ok_or_else(|| null("packing"))?;
        if k.0.dim() != p.0.dim {
            return Err(Error::MixedDimension {
                expected: p.0.dim,
                found: k.0.dim(),
            }
            .into());
        }
        let density = density_for(&p.0, &QuadSpec::default())?;
        write(out, dispersion_phs(&density, &k.0.radii(), p.0.dim)?.d_phs)
    })
}

/// Greedy Apollonian packing with `max_balls` balls (default search settings).
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_apollonian(
    dim: u32,
    max_balls: usize,
    out: *mut *mut HsPacking,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let stop = StopCriterion {
            max_balls: Some(max_balls),
            ..Default::default()
        };
        let p = greedy_apollonian(dim as usize, &stop, &SearchSpec::default())?;
        out.write(Box::into_raw(Box::new(HsPacking(p))));
        Ok(())
    })
}

/// Loads and validates a packing file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_load(
    path: *const c_char,
    out: *mut *mut HsPacking,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = load_packing(path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(HsPacking(p))));
        Ok(())
    })
}

/// Writes a packing file atomically.
///
/// # Safety
/// `packing` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_save(
    packing: *const HsPacking,
    path: *const c_char,
) -> HsStatus {
    guard(|| {
        let k = packing.as_ref().ok_or_else(|| null("packing"))?;
        save_packing(&k.0, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `packing` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_free(packing: *mut HsPacking) {
    if !packing.is_null() {
        drop(Box::from_raw(packing));
    }
}

/// Number of balls, or 0 for a null handle.
///
/// # Safety
/// `packing` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_len(packing: *const HsPacking) -> usize {
    packing.as_ref().map_or(0, |k| k.0.len())
}

/// Radius of ball `index` (balls are sorted by decreasing radius).
///
/// # Safety
/// `packing` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_radius(
    packing: *const HsPacking,
    index: usize,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let k = packing.as_ref().ok_or_else(|| null("packing"))?;
        let b = k.0.balls().get(index).ok_or_else(|| {
            Failure(
                HsStatus::OutOfRange,
                format!("index {index} out of range for {} balls", k.0.len()),
            )
        })?;
        write(out, b.radius)
    })
}

/// Covered volume fraction.
///
/// # Safety
/// `packing` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_packing_coverage(packing: *const HsPacking, out: *mut f64) -> HsStatus {
    guard(|| {
        let k = packing.as_ref().ok_or_else(|| null("packing"))?;
        write(out, k.0.coverage().fraction)
    })
}

/// Bracket [i_lower, i_upper] of the dispersion functional's minimum from a packing.
///
/// # Safety
/// `packing` must be a live handle; both outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hs_functional_bracket(
    packing: *const HsPacking,
    i_lower: *mut f64,
    i_upper: *mut f64,
) -> HsStatus {
    guard(|| {
        let k = packing.as_ref().ok_or_else(|| null("packing"))?;
        if i_lower.is_null() || i_upper.is_null() {
            return Err(null("output pointer"));
        }
        let m = minimum_from_packing(k.0.clone())?;
        write(i_lower, m.i_lower)?;
        write(i_upper, m.i_upper)
    })
}
