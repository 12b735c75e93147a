//! C ABI for the asrc classifiers and the trace-Lasso solver.
//!
//! Matrices are passed as column-major `double` buffers. Every fallible call
//! returns an [`AsrcStatus`]; on failure a message is available from
//! [`asrc_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use asrc::classify::{FittedClassifier, Method, MethodKind};
use asrc::prox::{correlation_regularizer, trace_norm};
use asrc::solver::solve_trace_lasso;
use asrc::{Dictionary, Error, Query, SolverOptions};
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ZeroColumn = 4,
    UnknownClass = 5,
    SingularGram = 6,
    NumericalDivergence = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsrcMethod {
    Asrc = 0,
    Src = 1,
    Crc = 2,
    Nn = 3,
    Nfs = 4,
}

impl From<AsrcMethod> for MethodKind {
    fn from(m: AsrcMethod) -> Self {
        match m {
            AsrcMethod::Asrc => MethodKind::Asrc,
            AsrcMethod::Src => MethodKind::Src,
            AsrcMethod::Crc => MethodKind::Crc,
            AsrcMethod::Nn => MethodKind::Nn,
            AsrcMethod::Nfs => MethodKind::Nfs,
        }
    }
}

/// Labeled training samples.
pub struct AsrcDictionary {
    inner: Dictionary,
}

/// A classifier fitted to a dictionary. Safe to share across threads for
/// concurrent `asrc_classify` calls.
pub struct AsrcClassifier {
    inner: FittedClassifier,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AsrcStatus {
    match err {
        Error::DimensionMismatch { .. } => AsrcStatus::DimensionMismatch,
        Error::ZeroColumn { .. } => AsrcStatus::ZeroColumn,
        Error::UnknownClass(_) => AsrcStatus::UnknownClass,
        Error::SingularGram => AsrcStatus::SingularGram,
        Error::NumericalDivergence { .. } => AsrcStatus::NumericalDivergence,
        _ => AsrcStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (AsrcStatus, String)>) -> AsrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsrcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AsrcStatus::Internal
        }
    }
}

fn lib<T>(r: asrc::Result<T>) -> Result<T, (AsrcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (AsrcStatus, String) {
    (AsrcStatus::NullPointer, format!("{name} is null"))
}

fn bad(msg: &str) -> (AsrcStatus, String) {
    (AsrcStatus::InvalidArgument, msg.to_string())
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], (AsrcStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `data` must hold `rows * cols` doubles.
unsafe fn matrix(data: *const f64, rows: usize, cols: usize) -> Result<DMatrix<f64>, (AsrcStatus, String)> {
    if rows == 0 || cols == 0 {
        return Err(bad("matrix dimensions must be positive"));
    }
    let len = rows.checked_mul(cols).ok_or_else(|| bad("matrix too large"))?;
    Ok(DMatrix::from_column_slice(rows, cols, slice(data, len, "matrix")?))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn asrc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn asrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dictionary from an `m x n` column-major matrix and `n` class ids
/// (dense, starting at 0).
///
/// # Safety
/// `data` holds `m * n` doubles, `labels` holds `n` entries, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn asrc_dictionary_new(
    data: *const f64,
    m: usize,
    n: usize,
    labels: *const usize,
    out: *mut *mut AsrcDictionary,
) -> AsrcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = matrix(data, m, n)?;
        let labels = slice(labels, n, "labels")?.to_vec();
        let inner = lib(Dictionary::new(x, labels))?;
        *out = Box::into_raw(Box::new(AsrcDictionary { inner }));
        Ok(())
    })
}

/// # Safety
/// `dict` is null or was returned by `asrc_dictionary_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asrc_dictionary_free(dict: *mut AsrcDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Number of classes in `dict`, or 0 for a null handle.
///
/// # Safety
/// `dict` is null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn asrc_dictionary_num_classes(dict: *const AsrcDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.inner.num_classes())
}

/// Fits a classifier. `weight` is lambda for ASRC/SRC and sigma for CRC; pass
/// a value `<= 0` for the default. Ignored by NN and NFS.
///
/// # Safety
/// `dict` is a live dictionary handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn asrc_classifier_new(
    dict: *const AsrcDictionary,
    method: AsrcMethod,
    weight: f64,
    out: *mut *mut AsrcClassifier,
) -> AsrcStatus {
    guard(|| {
        let dict = dict.as_ref().ok_or_else(|| null("dict"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let base: Method = MethodKind::from(method).default_method();
        let method = if weight > 0.0 { base.with_weight(weight) } else { base };
        let inner = lib(FittedClassifier::fit(&dict.inner, method))?;
        *out = Box::into_raw(Box::new(AsrcClassifier { inner }));
        Ok(())
    })
}

/// # Safety
/// `clf` is null or was returned by `asrc_classifier_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asrc_classifier_free(clf: *mut AsrcClassifier) {
    if !clf.is_null() {
        drop(Box::from_raw(clf));
    }
}

/// Classifies the length-`m` query `y`. Writes the class id to `class_out`
/// and, when `residuals_out` is non-null, one residual per class (the buffer
/// must hold `residuals_len >= num_classes` entries).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn asrc_classify(
    clf: *const AsrcClassifier,
    y: *const f64,
    m: usize,
    class_out: *mut usize,
    residuals_out: *mut f64,
    residuals_len: usize,
) -> AsrcStatus {
    guard(|| {
        let clf = clf.as_ref().ok_or_else(|| null("classifier"))?;
        if class_out.is_null() {
            return Err(null("class_out"));
        }
        let y = lib(Query::from_slice(slice(y, m, "y")?))?;
        let p = lib(clf.inner.classify(&y))?;
        if !residuals_out.is_null() {
            if residuals_len < p.residuals.len() {
                return Err(bad("residual buffer shorter than the number of classes"));
            }
            ptr::copy_nonoverlapping(p.residuals.as_ptr(), residuals_out, p.residuals.len());
        }
        *class_out = p.class_id;
        Ok(())
    })
}

/// Trace-Lasso coding of `y` over the `m x n` matrix `x` (used as given, not
/// normalized) with default solver settings and weight `lambda`. Writes `n`
/// coefficients to `alpha_out`; `iterations_out` and `converged_out` may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn asrc_solve(
    x: *const f64,
    m: usize,
    n: usize,
    y: *const f64,
    lambda: f64,
    alpha_out: *mut f64,
    iterations_out: *mut usize,
    converged_out: *mut bool,
) -> AsrcStatus {
    guard(|| {
        let x = matrix(x, m, n)?;
        let y = lib(Query::from_slice(slice(y, m, "y")?))?;
        if alpha_out.is_null() {
            return Err(null("alpha_out"));
        }
        let opts = SolverOptions::default().with_lambda(lambda);
        let res = lib(solve_trace_lasso(&x, &y, &opts))?;
        ptr::copy_nonoverlapping(res.alpha.as_ptr(), alpha_out, n);
        if !iterations_out.is_null() {
            *iterations_out = res.iterations;
        }
        if !converged_out.is_null() {
            *converged_out = res.converged;
        }
        Ok(())
    })
}

/// Sum of singular values of the `m x n` matrix.
///
/// # Safety
/// `x` holds `m * n` doubles and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn asrc_trace_norm(x: *const f64, m: usize, n: usize, out: *mut f64) -> AsrcStatus {
    guard(|| {
        let x = matrix(x, m, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(trace_norm(&x))?;
        Ok(())
    })
}

/// `||X Diag(alpha)||_*` for the `m x n` matrix `x` and length-`n` `alpha`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn asrc_correlation_regularizer(
    x: *const f64,
    m: usize,
    n: usize,
    alpha: *const f64,
    out: *mut f64,
) -> AsrcStatus {
    guard(|| {
        let x = matrix(x, m, n)?;
        let alpha = DVector::from_column_slice(slice(alpha, n, "alpha")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(correlation_regularizer(&x, &alpha))?;
        Ok(())
    })
}
