//! C ABI for coarsekit.
//!
//! Spaces and windows are opaque handles created by `ck_*_new`-style functions
//! and released with the matching `_free`. Every fallible call returns a
//! [`CkStatus`]; on failure the message is available from [`ck_last_error`]
//! until the next call on the same thread. Strings returned through out
//! parameters are owned by the caller and released with [`ck_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use coarsekit::cli::{error_status, Status};
use coarsekit::scale::components_at_scale;
use coarsekit::{json, Error, Space, Window};

/// Result codes. The first four agree with the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    VerificationFailed = 1,
    Infeasible = 2,
    Malformed = 3,
    NullPointer = 4,
    Utf8 = 5,
    Internal = 6,
}

/// A metric space.
pub struct CkSpace(Arc<Space>);

/// A finite window of a space.
pub struct CkWindow(Arc<Window>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Lib(Error),
    Code(CkStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

fn status_of(e: &Error) -> CkStatus {
    match error_status(e) {
        Status::Infeasible => CkStatus::Infeasible,
        _ => CkStatus::Malformed,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<CkStatus, Failure>) -> CkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Code(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CkStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Code(CkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Code(CkStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn parse(p: *const c_char, what: &str) -> Result<serde_json::Value, Failure> {
    Ok(serde_json::from_str(text(p, what)?)?)
}

fn null(what: &str) -> Failure {
    Failure::Code(CkStatus::NullPointer, format!("{what} is null"))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::Code(CkStatus::Internal, "output contains a nul byte".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// The message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// The library version as a static string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a space from a JSON specification such as `{"kind":"free_group","rank":2}`.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_space_from_json(spec: *const c_char, out: *mut *mut CkSpace) -> CkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let space = json::read_space(&parse(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(CkSpace(space)));
        Ok(CkStatus::Ok)
    })
}

/// # Safety
/// `space` must come from [`ck_space_from_json`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ck_space_free(space: *mut CkSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Distance between two points given in the space's JSON point encoding.
///
/// # Safety
/// All pointers must be valid; `x` and `y` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn ck_space_dist(space: *const CkSpace, x: *const c_char, y: *const c_char, out: *mut u64) -> CkStatus {
    guard(|| {
        let space = space.as_ref().ok_or_else(|| null("space"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = space.0.point_from_json(&parse(x, "x")?)?;
        let y = space.0.point_from_json(&parse(y, "y")?)?;
        *out = space.0.dist(&x, &y)?;
        Ok(CkStatus::Ok)
    })
}

/// The ball of `radius` around `center` (JSON point), or around the base point when `center` is null.
///
/// # Safety
/// `space` and `out` must be valid; `center` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn ck_window_ball(
    space: *const CkSpace,
    center: *const c_char,
    radius: u64,
    out: *mut *mut CkWindow,
) -> CkStatus {
    guard(|| {
        let space = space.as_ref().ok_or_else(|| null("space"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let center = if center.is_null() {
            space.0.base_point()
        } else {
            space.0.point_from_json(&parse(center, "center")?)?
        };
        let w = Window::ball(space.0.clone(), &center, radius)?;
        *out = Box::into_raw(Box::new(CkWindow(Arc::new(w))));
        Ok(CkStatus::Ok)
    })
}

/// Number of points in the window; 0 for null.
///
/// # Safety
/// `window` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ck_window_len(window: *const CkWindow) -> usize {
    window.as_ref().map_or(0, |w| w.0.len())
}

/// # Safety
/// `window` must come from [`ck_window_ball`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ck_window_free(window: *mut CkWindow) {
    if !window.is_null() {
        drop(Box::from_raw(window));
    }
}

/// Scale-`r` components of the window as a JSON document; free it with [`ck_string_free`].
///
/// # Safety
/// `window` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ck_components_json(window: *const CkWindow, r: u64, out: *mut *mut c_char) -> CkStatus {
    guard(|| {
        let w = &window.as_ref().ok_or_else(|| null("window"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let part = components_at_scale(w, r);
        let body = serde_json::json!({
            "window": w.to_json(),
            "r": r,
            "classes": part.classes.iter().map(|c| json::points_json(w, c)).collect::<Vec<_>>(),
            "max_class_size": part.max_class_size(),
        });
        give_string(json::tagged("components", w.space(), body).to_string(), out)?;
        Ok(CkStatus::Ok)
    })
}

/// Re-verifies a certificate document. Returns `CK_STATUS_OK` or
/// `CK_STATUS_VERIFICATION_FAILED`; the report is written to `report` when it is not null.
///
/// # Safety
/// `document` must be nul-terminated; `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn ck_verify_json(document: *const c_char, report: *mut *mut c_char) -> CkStatus {
    guard(|| {
        let verdict = json::verify_document(&parse(document, "document")?)?;
        if !report.is_null() {
            give_string(verdict.report.to_string(), report)?;
        }
        Ok(if verdict.passed { CkStatus::Ok } else { CkStatus::VerificationFailed })
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
