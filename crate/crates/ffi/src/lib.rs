//! C ABI over `relosc`.
//!
//! Plants live behind an opaque `ReloscPlant*` created by one of the
//! constructors and released with `relosc_plant_free`. Every fallible call
//! returns a `ReloscStatus`; on failure `relosc_last_error` holds a message
//! for the calling thread. Strings returned by the library are released
//! with `relosc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relosc::analyzer::{self, AnalysisOptions};
use relosc::config::PlantFile;
use relosc::report::to_json_string;
use relosc::{Error, PlantSpec, SignPattern};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReloscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidUtf8 = 3,
    Unstable = 4,
    Precondition = 5,
    Undecidable = 6,
    CapExceeded = 7,
    Internal = 8,
}

/// Opaque plant handle.
pub struct ReloscPlant {
    inner: PlantSpec,
}

/// Period range; `upper_convex` is 0 when the convex bound does not apply.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReloscPeriodBounds {
    pub lower: usize,
    pub upper_general: usize,
    pub upper_convex: usize,
    pub ps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn status_of(e: &Error) -> ReloscStatus {
    match e {
        Error::UnstablePoles { .. } => ReloscStatus::Unstable,
        Error::Precondition(_) => ReloscStatus::Precondition,
        Error::Undecidable(_) | Error::SummationDidNotConverge { .. } => ReloscStatus::Undecidable,
        Error::OracleCapExceeded { .. } => ReloscStatus::CapExceeded,
        _ => ReloscStatus::InvalidInput,
    }
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), (ReloscStatus, String)>) -> ReloscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ReloscStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic inside relosc");
            ReloscStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (ReloscStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ReloscStatus, String) {
    (ReloscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn plant_ref<'a>(p: *const ReloscPlant) -> Result<&'a PlantSpec, (ReloscStatus, String)> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("plant"))
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), (ReloscStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn relosc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a plant-spec JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_plant_from_json(json: *const c_char, out: *mut *mut ReloscPlant) -> ReloscStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (ReloscStatus::InvalidUtf8, e.to_string()))?;
        let plant = PlantFile::parse(text).and_then(|f| f.to_plant()).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(ReloscPlant { inner: plant })))
    })
}

/// Plant with `g0(t) = gain * a^t`, delay `delay` and dead zone `dead_zone`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_plant_geometric(
    a: f64,
    gain: f64,
    delay: usize,
    dead_zone: f64,
    out: *mut *mut ReloscPlant,
) -> ReloscStatus {
    guard(|| {
        let g = relosc::ImpulseResponse::geometric(a, gain).map_err(lib_err)?;
        let plant = PlantSpec::new(g, delay, dead_zone).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(ReloscPlant { inner: plant })))
    })
}

/// Releases a plant. NULL is ignored.
///
/// # Safety
/// `plant` must come from a relosc constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relosc_plant_free(plant: *mut ReloscPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// Delay after folding leading zero samples of the response.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_plant_delay(plant: *const ReloscPlant, out: *mut usize) -> ReloscStatus {
    guard(|| write_out(out, plant_ref(plant)?.delay))
}

/// Checks whether `pattern` (entries in {-1, 0, 1}) reproduces itself through
/// the loop. When `waveform` is not NULL it receives `len` loop values
/// aligned with the pattern's canonical rotation.
///
/// # Safety
/// `pattern` must point to `len` readable bytes, `waveform` to `len` writable
/// doubles or be NULL, `is_fixed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_verify_fixed_point(
    plant: *const ReloscPlant,
    pattern: *const i8,
    len: usize,
    waveform: *mut f64,
    is_fixed: *mut bool,
) -> ReloscStatus {
    guard(|| {
        let plant = plant_ref(plant)?;
        if pattern.is_null() {
            return Err(null("pattern"));
        }
        let entries = std::slice::from_raw_parts(pattern, len).to_vec();
        let pattern = SignPattern::new(entries).map_err(lib_err)?;
        let record = analyzer::verify_fixed_point(plant, &pattern, relosc::lti::DEFAULT_SUMMATION_TOL).map_err(lib_err)?;
        if let (Some(r), false) = (&record, waveform.is_null()) {
            std::slice::from_raw_parts_mut(waveform, len).copy_from_slice(r.waveform.values());
        }
        write_out(is_fixed, record.is_some())
    })
}

/// Dead-zone threshold below which the subharmonic family exists.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_chi0_threshold(plant: *const ReloscPlant, out: *mut f64) -> ReloscStatus {
    guard(|| write_out(out, analyzer::chi0_threshold(plant_ref(plant)?).map_err(lib_err)?))
}

/// Whether the half-wave oscillation of period `2 Pd` exists.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_exists_2pd(plant: *const ReloscPlant, out: *mut bool) -> ReloscStatus {
    guard(|| write_out(out, analyzer::exists_2pd(plant_ref(plant)?).map_err(lib_err)?))
}

/// Smallest `t` at which the head of `g0` outweighs its tail.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_compute_ps(plant: *const ReloscPlant, out: *mut usize) -> ReloscStatus {
    guard(|| write_out(out, analyzer::compute_ps(&plant_ref(plant)?.g0).map_err(lib_err)?))
}

/// Period range of unimodal oscillations with `P >= Pd`; needs `Pd >= 1`.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_period_bounds(plant: *const ReloscPlant, out: *mut ReloscPeriodBounds) -> ReloscStatus {
    guard(|| {
        let b = analyzer::period_bounds(plant_ref(plant)?).map_err(lib_err)?;
        write_out(
            out,
            ReloscPeriodBounds {
                lower: b.lower,
                upper_general: b.upper_general,
                upper_convex: b.upper_convex.unwrap_or(0),
                ps: b.ps,
            },
        )
    })
}

/// Full oscillation report as JSON. `pmax = 0` selects the default search
/// limit. The string must be released with `relosc_string_free`.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relosc_analyze_json(plant: *const ReloscPlant, pmax: usize, out: *mut *mut c_char) -> ReloscStatus {
    guard(|| {
        let plant = plant_ref(plant)?;
        let pmax = if pmax == 0 { analyzer::default_pmax(plant).map_err(lib_err)? } else { pmax };
        let opts = AnalysisOptions { pmax, prune: false, tol: relosc::lti::DEFAULT_SUMMATION_TOL };
        let report = analyzer::find_oscillations(plant, &opts).map_err(lib_err)?;
        let json = to_json_string(&report).map_err(lib_err)?;
        let c = CString::new(json).map_err(|e| (ReloscStatus::Internal, e.to_string()))?;
        write_out(out, c.into_raw())
    })
}

/// Releases a string returned by relosc. NULL is ignored.
///
/// # Safety
/// `s` must come from relosc and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relosc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
