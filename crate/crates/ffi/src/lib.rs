//! C interface to `qfals`.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a [`QfStatus`];
//! on failure [`qf_last_error`] describes the problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qfals::circuit::{evaluate, load_file, RunValue, TypedProgram};
use qfals::dilation::{dilation_round_trip, purify};
use qfals::falsification::{falsifier_search, twirl_analytic, witness_unfalsifiable, AverageMethod, HypothesisFamily, SearchConfig};
use qfals::linalg::{seeded_rng, ComplexMatrix, C64};
use qfals::model::{Context, Instrument, QuantumOperation, State, System};
use thiserror::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    InvalidInput = 4,
    Io = 5,
    Panic = 6,
}

/// Hypothesis families reachable from C.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfFamily {
    /// `dim_a`: dimension.
    Purity = 0,
    /// `dim_a`: dimension, `dim_b`: number of copies.
    PurityNCopies = 1,
    /// `dim_a ≥ dim_b`.
    MaxEntangled = 2,
    /// `dim_a`: input, `dim_b`: output.
    Atomic = 3,
    /// `dim_a`: input, `dim_b`: output.
    Isometric = 4,
}

/// Dense complex matrix.
pub struct QfMatrix(ComplexMatrix);

/// Parsed and typechecked circuit program.
pub struct QfProgram(TypedProgram);

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed as `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Core(#[from] qfals::Error),
    #[error("{0}")]
    Circuit(String),
    #[error("panic: {0}")]
    Panic(String),
}

impl FfiError {
    fn status(&self) -> QfStatus {
        match self {
            FfiError::Null(_) => QfStatus::NullPointer,
            FfiError::Utf8(_) => QfStatus::InvalidUtf8,
            FfiError::Argument(_) => QfStatus::InvalidArgument,
            FfiError::Core(qfals::Error::Io(_)) => QfStatus::Io,
            FfiError::Core(_) | FfiError::Circuit(_) => QfStatus::InvalidInput,
            FfiError::Panic(_) => QfStatus::Panic,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> QfStatus {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_default();
        Err(FfiError::Panic(msg))
    });
    match result {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QfStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            e.status()
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(name));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn qf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a `rows × cols` matrix from `2·rows·cols` doubles holding
/// interleaved real and imaginary parts in row-major order.
///
/// # Safety
/// `data` must point to `2·rows·cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut QfMatrix) -> QfStatus {
    guard(|| {
        if data.is_null() {
            return Err(FfiError::Null("data"));
        }
        let n = rows.checked_mul(cols).ok_or_else(|| FfiError::Argument("matrix too large".into()))?;
        let raw = std::slice::from_raw_parts(data, 2 * n);
        let entries = raw.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        let m = ComplexMatrix::new(rows, cols, entries)?;
        write_out(out, boxed(QfMatrix(m)), "out")
    })
}

/// Parses a matrix from its JSON form `{"rows","cols","data":[[re,im],...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_from_json(json: *const c_char, out: *mut *mut QfMatrix) -> QfStatus {
    guard(|| {
        let m: ComplexMatrix = serde_json::from_str(str_arg(json, "json")?).map_err(qfals::Error::from)?;
        write_out(out, boxed(QfMatrix(m)), "out")
    })
}

/// JSON form of `m`; release with [`qf_string_free`]. NULL on failure.
///
/// # Safety
/// `m` must be a live matrix handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_to_json(m: *const QfMatrix) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let m = handle(m, "m")?;
        let text = serde_json::to_string(&m.0).map_err(qfals::Error::from)?;
        result = CString::new(text).map_err(|e| FfiError::Argument(e.to_string()))?.into_raw();
        Ok(())
    });
    result
}

/// # Safety
/// `m` must be a live matrix handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_rows(m: *const QfMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be a live matrix handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_cols(m: *const QfMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Reads entry `(row, col)`.
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_get(m: *const QfMatrix, row: usize, col: usize, re: *mut f64, im: *mut f64) -> QfStatus {
    guard(|| {
        let m = &handle(m, "m")?.0;
        if row >= m.rows() || col >= m.cols() {
            return Err(FfiError::Argument(format!("index ({row}, {col}) outside {}x{}", m.rows(), m.cols())));
        }
        let z = m[(row, col)];
        write_out(re, z.re, "re")?;
        write_out(im, z.im, "im")
    })
}

/// # Safety
/// `m` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qf_matrix_free(m: *mut QfMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Purifies the density matrix `rho` into a rank-one state on `A ⊗ E` with
/// `dim E = dim A`.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_purify(rho: *const QfMatrix, out: *mut *mut QfMatrix) -> QfStatus {
    guard(|| {
        let m = handle(rho, "rho")?.0.clone();
        let sys = System::new("A", m.rows())?;
        let p = purify(&State::new(sys, m)?)?;
        write_out(out, boxed(QfMatrix(p.pure_state.matrix)), "out")
    })
}

/// Haar twirl of `x` on tensor factor `factor` of `dim_a ⊗ dim_b`.
///
/// # Safety
/// `x` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_twirl(x: *const QfMatrix, dim_a: usize, dim_b: usize, factor: usize, out: *mut *mut QfMatrix) -> QfStatus {
    guard(|| {
        let t = twirl_analytic(&handle(x, "x")?.0, &[dim_a, dim_b], factor)?;
        write_out(out, boxed(QfMatrix(t)), "out")
    })
}

/// Dilates an instrument given as JSON (an array of outcomes, each an array
/// of Kraus matrices) and reports the largest per-outcome Choi distance of
/// the rebuilt instrument.
///
/// # Safety
/// `instrument_json` must be a NUL-terminated string; `error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_dilation_round_trip(instrument_json: *const c_char, error: *mut f64) -> QfStatus {
    guard(|| {
        let outcomes: Vec<Vec<ComplexMatrix>> =
            serde_json::from_str(str_arg(instrument_json, "instrument_json")?).map_err(qfals::Error::from)?;
        let first = outcomes.first().and_then(|k| k.first()).ok_or_else(|| FfiError::Argument("empty instrument".into()))?;
        let (input, output) = (System::new("A", first.cols())?, System::new("B", first.rows())?);
        let ops = outcomes
            .into_iter()
            .map(|k| QuantumOperation::new(input.clone(), output.clone(), k))
            .collect::<qfals::Result<Vec<_>>>()?;
        let (_, err) = dilation_round_trip(&Instrument::from_operations(ops)?)?;
        write_out(error, err, "error")
    })
}

fn family(kind: QfFamily, dim_a: usize, dim_b: usize) -> Result<HypothesisFamily, FfiError> {
    let h = match kind {
        QfFamily::Purity => HypothesisFamily::Purity { dim: dim_a },
        QfFamily::PurityNCopies => HypothesisFamily::PurityNCopies { dim: dim_a, copies: dim_b },
        QfFamily::MaxEntangled => HypothesisFamily::MaxEntangled { dim_a, dim_b },
        QfFamily::Atomic => HypothesisFamily::AtomicTransformation { dim_in: dim_a, dim_out: dim_b },
        QfFamily::Isometric => HypothesisFamily::IsometricTransformation { dim_in: dim_a, dim_out: dim_b },
    };
    h.check()?;
    if h.total_dim() > 64 {
        return Err(FfiError::Argument(format!("total dimension {} exceeds 64", h.total_dim())));
    }
    Ok(h)
}

/// Smallest eigenvalue of the analytic family average and whether it exceeds
/// `tol` (then no nonzero falsifier exists).
///
/// # Safety
/// `lambda_min` and `unfalsifiable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_witness(
    kind: QfFamily,
    dim_a: usize,
    dim_b: usize,
    tol: f64,
    lambda_min: *mut f64,
    unfalsifiable: *mut bool,
) -> QfStatus {
    guard(|| {
        let v = witness_unfalsifiable(&family(kind, dim_a, dim_b)?, AverageMethod::Analytic, tol)?;
        write_out(lambda_min, v.lambda_min, "lambda_min")?;
        write_out(unfalsifiable, v.unfalsifiable, "unfalsifiable")
    })
}

/// Alternating-projection search for a nonzero falsifier. `*falsifier` is set
/// to a new matrix handle, or NULL when none was found; `*residual` receives
/// the final residual.
///
/// # Safety
/// `falsifier` and `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_search(
    kind: QfFamily,
    dim_a: usize,
    dim_b: usize,
    seed: u64,
    max_iter: usize,
    falsifier: *mut *mut QfMatrix,
    residual: *mut f64,
) -> QfStatus {
    guard(|| {
        let cfg = SearchConfig { max_iter, ..SearchConfig::default() };
        let out = falsifier_search(&family(kind, dim_a, dim_b)?, cfg, &mut seeded_rng(seed))?;
        let f = out.falsifier.map_or(ptr::null_mut(), |t| boxed(QfMatrix(t.falsifier.matrix)));
        write_out(residual, out.residual, "residual").inspect_err(|_| qf_matrix_free(f))?;
        write_out(falsifier, f, "falsifier")
    })
}

/// Loads and typechecks a `.qc` program; referenced files resolve next to it.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_program_load(path: *const c_char, out: *mut *mut QfProgram) -> QfStatus {
    guard(|| {
        let p = load_file(Path::new(str_arg(path, "path")?)).map_err(|errs| {
            FfiError::Circuit(errs.iter().map(|e| format!("[{}] {e}", e.category())).collect::<Vec<_>>().join("; "))
        })?;
        write_out(out, boxed(QfProgram(p)), "out")
    })
}

/// Probability of the closed run `run`.
///
/// # Safety
/// `p` must be a live handle, `run` a NUL-terminated string and
/// `probability` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_program_probability(p: *const QfProgram, run: *const c_char, probability: *mut f64) -> QfStatus {
    guard(|| {
        let r = evaluate(&handle(p, "p")?.0, str_arg(run, "run")?).map_err(|e| FfiError::Circuit(e.to_string()))?;
        match r.value {
            RunValue::Probability(x) => write_out(probability, x, "probability"),
            RunValue::State(_) => Err(FfiError::Argument(format!("run `{}` leaves open systems", r.run))),
        }
    })
}

/// State prepared by the open run `run`.
///
/// # Safety
/// `p` must be a live handle, `run` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_program_state(p: *const QfProgram, run: *const c_char, out: *mut *mut QfMatrix) -> QfStatus {
    guard(|| {
        let r = evaluate(&handle(p, "p")?.0, str_arg(run, "run")?).map_err(|e| FfiError::Circuit(e.to_string()))?;
        match r.value {
            RunValue::State(s) => write_out(out, boxed(QfMatrix(s.matrix)), "out"),
            RunValue::Probability(_) => Err(FfiError::Argument(format!("run `{}` is closed", r.run))),
        }
    })
}

/// # Safety
/// `p` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qf_program_free(p: *mut QfProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Default validation tolerance of the library.
#[no_mangle]
pub extern "C" fn qf_default_tol() -> f64 {
    Context::DEFAULT_TOL
}
