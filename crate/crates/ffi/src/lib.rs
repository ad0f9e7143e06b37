//! C interface to `kolmo`.
//!
//! Every fallible function returns a [`KolmoStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`kolmo_last_error`]. Strings handed out by this library must be
//! released with [`kolmo_string_free`], series handles with [`kolmo_series_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kolmo::normalform::{self, CertParams};
use kolmo::paramopt::{self, OptResult};
use kolmo::series::TruncSeries;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KolmoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    ComputationFailed = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KolmoMode {
    Basic = 0,
    Equalized = 1,
}

/// Exact truncated power series with rational coefficients.
pub struct KolmoSeries(TruncSeries);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmoOptimum {
    pub lambda: f64,
    pub mu: f64,
    pub r: f64,
    pub e_t_inf: f64,
    pub t_inf: f64,
    pub gradient_norm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmoCertParams {
    pub t0: f64,
    pub lambda: f64,
    pub mu: f64,
    pub r: f64,
    pub beta: f64,
    pub n: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmoCertificate {
    pub passes: bool,
    pub condition_i: bool,
    pub condition_ii: bool,
    pub condition_iii: bool,
    pub c: f64,
    pub big_r: f64,
    pub t_inf: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(KolmoStatus, String);

fn fail<T>(status: KolmoStatus, message: impl ToString) -> Result<T, Failure> {
    Err(Failure(status, message.to_string()))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> KolmoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KolmoStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KolmoStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, Failure> {
    if text.is_null() {
        return fail(KolmoStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(text)
        .to_str()
        .or_else(|e| fail(KolmoStatus::InvalidUtf8, e))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(KolmoStatus::NullPointer, "null output pointer");
    }
    out.write(value);
    Ok(())
}

fn to_c_string(text: String) -> Result<*mut c_char, Failure> {
    CString::new(text)
        .map(CString::into_raw)
        .or_else(|e| fail(KolmoStatus::ComputationFailed, e))
}

unsafe fn series_ref<'a>(handle: *const KolmoSeries) -> Result<&'a TruncSeries, Failure> {
    handle
        .as_ref()
        .map(|s| &s.0)
        .ok_or(Failure(KolmoStatus::NullPointer, "null series handle".into()))
}

fn new_handle(series: TruncSeries) -> *mut KolmoSeries {
    Box::into_raw(Box::new(KolmoSeries(series)))
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn kolmo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn kolmo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `text` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn kolmo_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Parses `{"trunc_order": N, "coeffs": ["p/q", ...]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_from_json(json: *const c_char, out: *mut *mut KolmoSeries) -> KolmoStatus {
    guard(|| {
        let text = read_str(json)?;
        let series: TruncSeries = serde_json::from_str(text).or_else(|e| fail(KolmoStatus::ParseError, e))?;
        write_out(out, new_handle(series))
    })
}

/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_to_json(series: *const KolmoSeries, out: *mut *mut c_char) -> KolmoStatus {
    guard(|| {
        let s = series_ref(series)?;
        let text = serde_json::to_string(s).or_else(|e| fail(KolmoStatus::ComputationFailed, e))?;
        write_out(out, to_c_string(text)?)
    })
}

/// Coefficient of `z^index` as `"p/q"`.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_coeff(
    series: *const KolmoSeries,
    index: usize,
    out: *mut *mut c_char,
) -> KolmoStatus {
    guard(|| {
        let s = series_ref(series)?;
        match s.coeff(index) {
            Some(c) => write_out(out, to_c_string(c.to_string())?),
            None => fail(
                KolmoStatus::InvalidArgument,
                format!("z^{index} is beyond the truncation order {}", s.trunc_order()),
            ),
        }
    })
}

/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_trunc_order(series: *const KolmoSeries, out: *mut isize) -> KolmoStatus {
    guard(|| write_out(out, series_ref(series)?.trunc_order()))
}

/// `outer ∘ inner`; `inner` must vanish at 0.
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_compose(
    outer: *const KolmoSeries,
    inner: *const KolmoSeries,
    out: *mut *mut KolmoSeries,
) -> KolmoStatus {
    guard(|| {
        let result = series_ref(outer)?
            .compose(series_ref(inner)?)
            .or_else(|e| fail(KolmoStatus::InvalidArgument, e))?;
        write_out(out, new_handle(result))
    })
}

/// Compositional inverse of a series `a_1 z + ...` with `a_1 != 0`.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_invert(series: *const KolmoSeries, out: *mut *mut KolmoSeries) -> KolmoStatus {
    guard(|| {
        let result = series_ref(series)?
            .invert()
            .or_else(|e| fail(KolmoStatus::InvalidArgument, e))?;
        write_out(out, new_handle(result))
    })
}

/// Normalizing map of `z^2/2 + β z^n` after `steps` rounds, known to `z^trunc`.
///
/// # Safety
/// `beta` must be a valid NUL-terminated string such as `"1/2"` and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_normalizer(
    n: usize,
    beta: *const c_char,
    steps: usize,
    trunc: usize,
    out: *mut *mut KolmoSeries,
) -> KolmoStatus {
    guard(|| {
        let beta = kolmo::series::parse_rational(read_str(beta)?).or_else(|e| fail(KolmoStatus::ParseError, e))?;
        let (a, b0) = normalform::perturbed_quadratic(&beta, n, trunc);
        let trace = normalform::lie_iterate_formal(&a, &b0, steps).or_else(|e| fail(KolmoStatus::InvalidArgument, e))?;
        let psi = normalform::normalizer_series(&trace).or_else(|e| fail(KolmoStatus::ComputationFailed, e))?;
        write_out(out, new_handle(psi))
    })
}

/// # Safety
/// `series` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn kolmo_series_free(series: *mut KolmoSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Evaluates the certificate conditions; a failing certificate is still `KOLMO_STATUS_OK`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_certify(params: KolmoCertParams, out: *mut KolmoCertificate) -> KolmoStatus {
    guard(|| {
        let cert = normalform::certify(CertParams {
            t0: params.t0,
            lambda: params.lambda,
            mu: params.mu,
            r: params.r,
            beta: params.beta,
            n: params.n,
        })
        .or_else(|e| fail(KolmoStatus::InvalidArgument, e))?;
        write_out(
            out,
            KolmoCertificate {
                passes: cert.passes,
                condition_i: cert.condition_i.holds,
                condition_ii: cert.condition_ii.holds,
                condition_iii: cert.condition_iii.holds,
                c: cert.c,
                big_r: cert.big_r,
                t_inf: cert.t_inf,
            },
        )
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_threshold_t0(
    lambda: f64,
    mu: f64,
    r: f64,
    beta: f64,
    n: u32,
    out: *mut f64,
) -> KolmoStatus {
    guard(|| {
        let t0 = normalform::threshold_t0(lambda, mu, r, beta, n).or_else(|e| fail(KolmoStatus::InvalidArgument, e))?;
        write_out(out, t0)
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_optimize(mode: KolmoMode, out: *mut KolmoOptimum) -> KolmoStatus {
    guard(|| {
        let m: OptResult = match mode {
            KolmoMode::Basic => paramopt::maximize_basic(),
            KolmoMode::Equalized => paramopt::maximize_equalized(),
        };
        write_out(
            out,
            KolmoOptimum {
                lambda: m.lambda,
                mu: m.mu,
                r: m.r.unwrap_or(f64::NAN),
                e_t_inf: m.e_t_inf,
                t_inf: m.t_inf,
                gradient_norm: m.gradient_norm,
            },
        )
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_true_radius(n: u32, beta: f64, out: *mut f64) -> KolmoStatus {
    guard(|| write_out(out, paramopt::true_radius(n, beta).or_else(|e| fail(KolmoStatus::InvalidArgument, e))?))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_q_value(n: u32, lambda: f64, mu: f64, out: *mut f64) -> KolmoStatus {
    guard(|| write_out(out, paramopt::q_value(n, lambda, mu).or_else(|e| fail(KolmoStatus::InvalidArgument, e))?))
}

/// Runs a command-line invocation in process, e.g. `{"certify", "--t0", "0.004"}`
/// (without the program name). Both output strings are always set on success
/// and must be freed; `exit_code` follows the command-line convention.
///
/// # Safety
/// `argv` must point to `argc` valid NUL-terminated strings; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kolmo_run(
    argv: *const *const c_char,
    argc: usize,
    exit_code: *mut c_int,
    stdout_text: *mut *mut c_char,
    stderr_text: *mut *mut c_char,
) -> KolmoStatus {
    guard(|| {
        if argc > 0 && argv.is_null() {
            return fail(KolmoStatus::NullPointer, "null argv");
        }
        if exit_code.is_null() || stdout_text.is_null() || stderr_text.is_null() {
            return fail(KolmoStatus::NullPointer, "null output pointer");
        }
        let mut args = vec!["kolmo".to_string()];
        for i in 0..argc {
            args.push(read_str(*argv.add(i))?.to_string());
        }
        let outcome = kolmo::cli::run(args);
        let out = to_c_string(outcome.stdout)?;
        let err = match to_c_string(outcome.stderr) {
            Ok(err) => err,
            Err(e) => {
                kolmo_string_free(out);
                return Err(e);
            }
        };
        exit_code.write(outcome.code);
        stdout_text.write(out);
        stderr_text.write(err);
        Ok(())
    })
}
