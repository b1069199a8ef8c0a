//! C ABI for the `gksl` crate.
//!
//! Specs and kernels are opaque handles owned by the caller and released with
//! `gksl_spec_free` / `gksl_kernel_free`. Every fallible call returns a
//! [`GkslStatus`]; on failure `gksl_last_error` describes what went wrong on
//! the calling thread. Strings handed out by the library are freed with
//! `gksl_string_free`. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gksl::io::{self, KernelJson, SpecFile, ValidationJson};
use gksl::kernel::{self, KernelBasis};
use gksl::{generator, GeneratorSpec, GkslError};

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkslStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidSpec = 4,
    Precondition = 5,
    IndexOutOfRange = 6,
    ShapeMismatch = 7,
    InvalidArgument = 8,
    Io = 9,
    Panic = 10,
}

/// A parsed generator spec.
pub struct GkslSpec {
    file: SpecFile,
    spec: GeneratorSpec,
}

/// A kernel basis of `L`.
pub struct GkslKernel {
    n: usize,
    basis: KernelBasis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    // interior NULs would truncate the message on the C side anyway
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &GkslError) -> GkslStatus {
    match e {
        GkslError::IndexOutOfRange(_) => GkslStatus::IndexOutOfRange,
        GkslError::ShapeMismatch(_) => GkslStatus::ShapeMismatch,
        GkslError::InvalidSpec(_) => GkslStatus::InvalidSpec,
        GkslError::Precondition(_) => GkslStatus::Precondition,
        GkslError::InvalidArgument(_) => GkslStatus::InvalidArgument,
        GkslError::Parse { .. } => GkslStatus::Parse,
        GkslError::Io(_) => GkslStatus::Io,
    }
}

struct Failure(GkslStatus, String);

impl From<GkslError> for Failure {
    fn from(e: GkslError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GkslStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, recording errors and panics for `gksl_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GkslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GkslStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            GkslStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(GkslStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn tol_arg(tol: f64) -> Result<f64, Failure> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(tol)
    } else {
        Err(Failure(GkslStatus::InvalidArgument, format!("tolerance must be finite and >= 0, got {tol}")))
    }
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure(GkslStatus::InvalidArgument, e.to_string()))
}

fn spec_handle(file: SpecFile) -> Result<*mut GkslSpec, Failure> {
    let spec = file.to_generator()?;
    Ok(Box::into_raw(Box::new(GkslSpec { file, spec })))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gksl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn gksl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gksl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a spec from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_from_json(json: *const c_char, out: *mut *mut GkslSpec) -> GkslStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = spec_handle(SpecFile::parse(str_arg(json, "json")?)?)?;
        Ok(())
    })
}

/// Reads a spec file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_read(path: *const c_char, out: *mut *mut GkslSpec) -> GkslStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = spec_handle(SpecFile::read(Path::new(str_arg(path, "path")?))?)?;
        Ok(())
    })
}

/// Frees a spec. Null is ignored.
///
/// # Safety
/// `spec` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_free(spec: *mut GkslSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Hilbert-space dimension `N`, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_dim(spec: *const GkslSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.dim())
}

/// A spec handle serialized in the file format, as written by the CLI.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_to_json(spec: *const GkslSpec, out: *mut *mut c_char) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        *out_arg(out, "out")? = c_string(spec.file.to_json())?;
        Ok(())
    })
}

/// SHA-256 of the normalized spec JSON, as 64 hex digits.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_spec_hash(spec: *const GkslSpec, out: *mut *mut c_char) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        *out_arg(out, "out")? = c_string(spec.file.hash())?;
        Ok(())
    })
}

/// Checks complete positivity. `verdict` receives the overall result;
/// `report_json`, if not null, receives the full validation report.
///
/// # Safety
/// `spec` must be a live handle, `verdict` a valid pointer and `report_json`
/// null or valid.
#[no_mangle]
pub unsafe extern "C" fn gksl_validate(
    spec: *const GkslSpec,
    tol: f64,
    verdict: *mut bool,
    report_json: *mut *mut c_char,
) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        let verdict = out_arg(verdict, "verdict")?;
        let report = generator::validate_with_tol(&spec.spec, tol_arg(tol)?);
        *verdict = report.verdict;
        if let Some(out) = report_json.as_mut() {
            *out = c_string(io::to_json_string(&ValidationJson::from(&report)))?;
        }
        Ok(())
    })
}

/// Canonical form of a valid spec, as a new handle.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_canonicalize(spec: *const GkslSpec, tol: f64, out: *mut *mut GkslSpec) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let tol = tol_arg(tol)?;
        let canon = generator::canonicalize_with_tol(&spec.spec, tol)?;
        *out = spec_handle(SpecFile::from_generator(&canon, tol))?;
        Ok(())
    })
}

fn kernel_handle(n: usize, basis: KernelBasis) -> *mut GkslKernel {
    Box::into_raw(Box::new(GkslKernel { n, basis }))
}

/// Closed-form kernel. Fails with `InvalidSpec` for a non-generator and with
/// `Precondition` when the generator is not pair-block-diagonal with diagonal `H`;
/// use `gksl_oracle` then.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_kernel(spec: *const GkslSpec, tol: f64, out: *mut *mut GkslKernel) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let opts = kernel::KernelOptions { tol: tol_arg(tol)?, ..Default::default() };
        *out = kernel_handle(spec.spec.dim(), kernel::full_kernel_with(&spec.spec, opts)?);
        Ok(())
    })
}

/// Kernel from the numerical null space of the superoperator.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_oracle(spec: *const GkslSpec, tol: f64, out: *mut *mut GkslKernel) -> GkslStatus {
    guard(|| {
        let spec = ref_arg(spec, "spec")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = kernel_handle(spec.spec.dim(), kernel::brute_force_kernel(&spec.spec, tol_arg(tol)?));
        Ok(())
    })
}

/// Frees a kernel. Null is ignored.
///
/// # Safety
/// `kernel` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gksl_kernel_free(kernel: *mut GkslKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Number of basis elements, or 0 for a null handle.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gksl_kernel_dim(kernel: *const GkslKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.basis.dim())
}

/// Copies element `index` into `buf` as `N*N` row-major (re, im) pairs;
/// `len` is the capacity of `buf` in doubles and must be at least `2*N*N`.
///
/// # Safety
/// `kernel` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gksl_kernel_element(
    kernel: *const GkslKernel,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> GkslStatus {
    guard(|| {
        let k = ref_arg(kernel, "kernel")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let m = k.basis.basis.get(index).ok_or_else(|| {
            Failure(GkslStatus::IndexOutOfRange, format!("element {index} of {}", k.basis.dim()))
        })?;
        let need = 2 * k.n * k.n;
        if len < need {
            return Err(Failure(GkslStatus::ShapeMismatch, format!("buffer holds {len} doubles, need {need}")));
        }
        let buf = std::slice::from_raw_parts_mut(buf, need);
        for i in 0..k.n {
            for j in 0..k.n {
                let z = m[(i, j)];
                buf[2 * (i * k.n + j)] = z.re;
                buf[2 * (i * k.n + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// The kernel in the CLI's JSON layout (1-based indices).
///
/// # Safety
/// `kernel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_kernel_to_json(kernel: *const GkslKernel, out: *mut *mut c_char) -> GkslStatus {
    guard(|| {
        let k = ref_arg(kernel, "kernel")?;
        *out_arg(out, "out")? = c_string(io::to_json_string(&KernelJson::from_basis(&k.basis, None)))?;
        Ok(())
    })
}

/// Largest principal angle (radians) between the spans of two kernels.
///
/// # Safety
/// `a` and `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gksl_max_principal_angle(
    a: *const GkslKernel,
    b: *const GkslKernel,
    out: *mut f64,
) -> GkslStatus {
    guard(|| {
        let (a, b) = (ref_arg(a, "a")?, ref_arg(b, "b")?);
        *out_arg(out, "out")? = kernel::max_principal_angle(&a.basis.basis, &b.basis.basis)?;
        Ok(())
    })
}
