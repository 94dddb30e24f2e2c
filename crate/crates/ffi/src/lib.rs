//! C interface to `ucq-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Strings returned through `char **` are
//! allocated here and must be released with `ucq_string_free`. Every call
//! returns a `UcqStatus`; on failure `ucq_last_error_message` describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ucq_core::cli::{count_answers, expansion_report, Engine};
use ucq_core::counting::AnswerCount;
use ucq_core::expansion::{cq_expansion, meta_decide, wl_dimension, ExpansionMode, ExpansionOptions};
use ucq_core::io::{parse_complex, parse_database, parse_query, write_query};
use ucq_core::simplicial::{reduce_complex_to_ucq, reduced_euler_characteristic, Complex, Reduction};
use ucq_core::{Caps, Error, Structure, Ucq};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    SignatureError = 4,
    CapExceeded = 5,
    Precondition = 6,
    InvalidInput = 7,
    Panic = 8,
}

/// A parsed query file.
pub struct UcqQuery(Ucq);

/// A parsed database file.
pub struct UcqDatabase(Structure);

/// A parsed complex file.
pub struct UcqComplex(Complex);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> UcqStatus {
    match e {
        Error::Parse { .. } => UcqStatus::ParseError,
        Error::SignatureMismatch(_) | Error::ArityMismatch { .. } | Error::UnknownSymbol(_) => {
            UcqStatus::SignatureError
        }
        Error::CapExceeded { .. } => UcqStatus::CapExceeded,
        Error::Precondition(_) => UcqStatus::Precondition,
        Error::UnknownElement(_) | Error::InvalidStructure(_) | Error::InvalidComplex(_) => {
            UcqStatus::InvalidInput
        }
    }
}

struct Fail(UcqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, turning errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UcqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UcqStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            UcqStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(UcqStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UcqStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(UcqStatus::NullPointer, "null handle".into()))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(UcqStatus::NullPointer, "null output pointer".into()));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(UcqStatus::InvalidInput, "interior NUL in output".into()))?;
    put(out, c.into_raw())
}

/// Parses a query file; `*out` receives a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_query_parse(text: *const c_char, out: *mut *mut UcqQuery) -> UcqStatus {
    guard(|| {
        let q = parse_query(cstr(text)?)?;
        put(out, Box::into_raw(Box::new(UcqQuery(q))))
    })
}

/// # Safety
/// `q` must come from `ucq_query_parse` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ucq_query_free(q: *mut UcqQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Parses a database file; `*out` receives a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_database_parse(text: *const c_char, out: *mut *mut UcqDatabase) -> UcqStatus {
    guard(|| {
        let d = parse_database(cstr(text)?)?;
        put(out, Box::into_raw(Box::new(UcqDatabase(d))))
    })
}

/// # Safety
/// `d` must come from `ucq_database_parse` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ucq_database_free(d: *mut UcqDatabase) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Parses a complex file; `*out` receives a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_complex_parse(text: *const c_char, out: *mut *mut UcqComplex) -> UcqStatus {
    guard(|| {
        let c = parse_complex(cstr(text)?)?;
        put(out, Box::into_raw(Box::new(UcqComplex(c))))
    })
}

/// # Safety
/// `c` must come from `ucq_complex_parse` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ucq_complex_free(c: *mut UcqComplex) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of answers as a decimal string.
///
/// # Safety
/// Handles must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_count(
    q: *const UcqQuery,
    d: *const UcqDatabase,
    out: *mut *mut c_char,
) -> UcqStatus {
    guard(|| {
        let (q, d) = (handle(q)?, handle(d)?);
        let c: AnswerCount = count_answers(&q.0, &d.0, Engine::Auto, &Caps::default(), 1)?;
        put_string(out, c.value.to_string())
    })
}

/// Linear-time verdict for a quantifier-free UCQ.
///
/// # Safety
/// `q` must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_meta(q: *const UcqQuery, out: *mut bool) -> UcqStatus {
    guard(|| {
        let v = meta_decide(&handle(q)?.0, &Caps::default(), 1)?;
        put(out, v.linear_time)
    })
}

/// # Safety
/// `q` must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_wl_dimension(q: *const UcqQuery, out: *mut usize) -> UcqStatus {
    guard(|| {
        let w = wl_dimension(&handle(q)?.0, &Caps::default(), 1)?;
        put(out, w)
    })
}

/// Expansion table as JSON. `core_mode` selects grouping by #cores.
///
/// # Safety
/// `q` must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_expand_json(
    q: *const UcqQuery,
    core_mode: bool,
    out: *mut *mut c_char,
) -> UcqStatus {
    guard(|| {
        let mode = if core_mode {
            ExpansionMode::CoreAndIsomorphism
        } else {
            ExpansionMode::IsomorphismOnly
        };
        let t = cq_expansion(&handle(q)?.0, ExpansionOptions::with_mode(mode), &Caps::default())?;
        put_string(out, expansion_report(&t).to_string())
    })
}

/// # Safety
/// `c` must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucq_complex_euler(c: *const UcqComplex, out: *mut i64) -> UcqStatus {
    guard(|| {
        let v = reduced_euler_characteristic(&handle(c)?.0, &Caps::default())?;
        put(out, v)
    })
}

/// Reduces a complex. On the UCQ branch `*out_is_ucq` is true and `*out_text`
/// holds a query file; otherwise `*out_euler` holds the value and
/// `*out_text` is set to null.
///
/// # Safety
/// `c` must be live; all output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucq_complex_reduce(
    c: *const UcqComplex,
    t: usize,
    out_is_ucq: *mut bool,
    out_euler: *mut i64,
    out_text: *mut *mut c_char,
) -> UcqStatus {
    guard(|| {
        if out_is_ucq.is_null() || out_euler.is_null() || out_text.is_null() {
            return Err(Fail(UcqStatus::NullPointer, "null output pointer".into()));
        }
        match reduce_complex_to_ucq(&handle(c)?.0, t, &Caps::default())? {
            Reduction::Euler(v) => {
                put(out_is_ucq, false)?;
                put(out_euler, v)?;
                put(out_text, ptr::null_mut())
            }
            Reduction::Ucq { ucq, .. } => {
                put(out_is_ucq, true)?;
                put(out_euler, 0)?;
                put_string(out_text, write_query(&ucq))
            }
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ucq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ucq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
