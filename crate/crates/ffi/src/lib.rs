//! C ABI over `qostbc`.
//!
//! Codes are opaque handles created by [`qostbc_code_build`] or
//! [`qostbc_code_from_json`] and released with [`qostbc_code_free`]. Every
//! fallible call returns a [`QostbcStatus`]; on failure a message is kept per
//! thread and can be read with [`qostbc_last_error`]. Strings handed out by the
//! library must be released with [`qostbc_string_free`].

use qostbc::catalog::{CodeDefinition, CodeJson};
use qostbc::{gain, Error};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QostbcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownCode = 3,
    UnsupportedModulation = 4,
    Dimension = 5,
    Budget = 6,
    Internal = 7,
}

/// Opaque code handle.
pub struct QostbcCode {
    inner: CodeDefinition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> QostbcStatus {
    match e {
        Error::UnknownCode { .. } => QostbcStatus::UnknownCode,
        Error::UnsupportedModulation(_) => QostbcStatus::UnsupportedModulation,
        Error::Dimension { .. } => QostbcStatus::Dimension,
        Error::Budget { .. } => QostbcStatus::Budget,
        _ => QostbcStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic for `qostbc_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (QostbcStatus, String)>) -> QostbcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QostbcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QostbcStatus::Internal
        }
    }
}

fn lib(e: Error) -> (QostbcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (QostbcStatus, String) {
    (QostbcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (QostbcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (QostbcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn code_ref<'a>(code: *const QostbcCode) -> Result<&'a CodeDefinition, (QostbcStatus, String)> {
    code.as_ref().map(|c| &c.inner).ok_or_else(|| null("code"))
}

fn into_handle(code: CodeDefinition) -> *mut QostbcCode {
    Box::into_raw(Box::new(QostbcCode { inner: code }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qostbc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qostbc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a catalog code such as `"Q4_LT"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_build(name: *const c_char, out: *mut *mut QostbcCode) -> QostbcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(name, "name")?;
        let code = qostbc::catalog::build_named(name).map_err(lib)?;
        *out = into_handle(code);
        Ok(())
    })
}

/// Parses a code from its JSON form; the grouping is rediscovered at `tol`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_from_json(json: *const c_char, tol: f64, out: *mut *mut QostbcCode) -> QostbcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let parsed: CodeJson =
            serde_json::from_str(text).map_err(|e| (QostbcStatus::InvalidArgument, e.to_string()))?;
        let code = CodeDefinition::from_json(&parsed, tol).map_err(lib)?;
        *out = into_handle(code);
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `code` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_free(code: *mut QostbcCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Block length `t`, transmit antennas `nt` and complex symbols `k`.
///
/// # Safety
/// `code` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_dims(
    code: *const QostbcCode,
    t: *mut usize,
    nt: *mut usize,
    k: *mut usize,
) -> QostbcStatus {
    guard(|| {
        let c = code_ref(code)?;
        if t.is_null() || nt.is_null() || k.is_null() {
            return Err(null("output"));
        }
        *t = c.t();
        *nt = c.nt();
        *k = c.k();
        Ok(())
    })
}

/// Size of the largest symbol group, in real symbols.
///
/// # Safety
/// `code` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_group_size(code: *const QostbcCode, out: *mut usize) -> QostbcStatus {
    guard(|| {
        let c = code_ref(code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c.grouping().max_group_size();
        Ok(())
    })
}

/// Code as JSON; free the result with `qostbc_string_free`.
///
/// # Safety
/// `code` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_to_json(code: *const QostbcCode, out: *mut *mut c_char) -> QostbcStatus {
    guard(|| {
        let c = code_ref(code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = serde_json::to_string(&c.to_json()).map_err(|e| (QostbcStatus::Internal, e.to_string()))?;
        *out = CString::new(s).map_err(|e| (QostbcStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Diversity product with `m`-QAM (`m` ∈ {4, 16, 64, 256}).
///
/// # Safety
/// `code` must be a live handle; `zeta` and `full_diversity` writable.
#[no_mangle]
pub unsafe extern "C" fn qostbc_diversity_product(
    code: *const QostbcCode,
    m: u32,
    zeta: *mut f64,
    full_diversity: *mut bool,
) -> QostbcStatus {
    guard(|| {
        let c = code_ref(code)?;
        if zeta.is_null() || full_diversity.is_null() {
            return Err(null("output"));
        }
        let con = qostbc::make_qam(m as usize).map_err(lib)?;
        let r = gain::diversity_product(c, &con).map_err(lib)?;
        *zeta = r.zeta;
        *full_diversity = r.full_diversity;
        Ok(())
    })
}

/// Encodes `2K` real symbols `[Re x; Im x]` into the `T×Nt` code matrix,
/// written row-major into `out_re` and `out_im` (each `out_len = T·Nt` long).
///
/// # Safety
/// `s` must point to `s_len` doubles; `out_re`/`out_im` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qostbc_code_encode(
    code: *const QostbcCode,
    s: *const f64,
    s_len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> QostbcStatus {
    guard(|| {
        let c = code_ref(code)?;
        if s.is_null() || out_re.is_null() || out_im.is_null() {
            return Err(null("buffer"));
        }
        if out_len != c.t() * c.nt() {
            return Err((
                QostbcStatus::Dimension,
                format!("output length {out_len}, expected {}", c.t() * c.nt()),
            ));
        }
        let symbols = std::slice::from_raw_parts(s, s_len);
        let m = c.encode(symbols).map_err(lib)?;
        let re = std::slice::from_raw_parts_mut(out_re, out_len);
        let im = std::slice::from_raw_parts_mut(out_im, out_len);
        for (i, v) in m.data().iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn qostbc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
