//! C ABI over the Gaussian side of `localdep`.
//!
//! Models are opaque handles created by `ld_model_new` or
//! `ld_model_from_json` and released with `ld_model_free`. Every fallible
//! call returns an [`LdStatus`]; on failure `ld_last_error` gives a message
//! for the calling thread. Matrices are row-major. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use localdep::{
    solve_reference_point, sweep, Error, ErrorClass, GaussianModel, GridAxis, GridSpec,
    LocalDependence, Point, SolverOptions,
};

/// Status codes. Nonzero codes match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    InvalidInput = 2,
    Computation = 3,
    NoConvergence = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// One swept axis for `ld_sweep`: `count` values from `lo` to `hi` inclusive.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LdRange {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Opaque model handle.
pub struct LdModel {
    inner: GaussianModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let c = CString::new(message).unwrap_or_else(|e| {
        let bytes: Vec<u8> = e.into_vec().into_iter().filter(|b| *b != 0).collect();
        CString::new(bytes).unwrap_or_default()
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

struct Fail(LdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Validation => LdStatus::InvalidInput,
            ErrorClass::Computation => LdStatus::Computation,
            ErrorClass::NoConvergence => LdStatus::NoConvergence,
        };
        Fail(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LdStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LdStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(LdStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn read<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `m` must be null or a live handle from this library.
unsafe fn model<'a>(m: *const LdModel) -> Result<&'a GaussianModel, Fail> {
    m.as_ref().map(|h| &h.inner).ok_or_else(|| null("model"))
}

/// # Safety
/// `out` must be null or writable.
unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn point_from(p: *const f64, len: usize, dim: usize) -> Result<Point, Fail> {
    let coords = read(p, len, "point")?;
    if len != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: len,
        }
        .into());
    }
    Ok(Point::new(coords.to_vec())?)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `ld_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ld_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a Gaussian model from a mean of length `dim` and a row-major
/// `dim × dim` covariance.
///
/// # Safety
/// `mean` and `cov` must point to `dim` and `dim * dim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_model_new(
    dim: usize,
    mean: *const f64,
    cov: *const f64,
    out: *mut *mut LdModel,
) -> LdStatus {
    guard(|| {
        let mean = read(mean, dim, "mean")?.to_vec();
        let cov = read(cov, dim.saturating_mul(dim), "cov")?;
        let rows = cov.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        let inner = GaussianModel::from_parts(mean, rows)?;
        write_out(out, Box::into_raw(Box::new(LdModel { inner })), "out")
    })
}

/// Creates a model from `{"mean": [...], "cov": [[...], ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_model_from_json(
    json: *const c_char,
    out: *mut *mut LdModel,
) -> LdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(LdStatus::InvalidInput, format!("json: {e}")))?;
        let inner = GaussianModel::from_json(text)
            .map_err(|e| Fail(LdStatus::InvalidInput, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(LdModel { inner })), "out")
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ld_model_free(m: *mut LdModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_model_dim(m: *const LdModel) -> usize {
    m.as_ref().map_or(0, |h| h.inner.dim())
}

/// Joint density at a point.
///
/// # Safety
/// `point` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_pdf(
    m: *const LdModel,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let p = point_from(point, len, g.dim())?;
        write_out(out, g.pdf(&p)?, "out")
    })
}

/// `E(X_target | others = given)`, `given` listing the other `dim - 1`
/// coordinates in index order.
///
/// # Safety
/// `given` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_conditional_mean(
    m: *const LdModel,
    target: usize,
    given: *const f64,
    len: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let given = read(given, len, "given")?;
        write_out(out, g.conditional_mean(target, given)?, "out")
    })
}

/// Standardized mixed central moment over `k ≥ 2` distinct indices.
///
/// # Safety
/// `indices` must hold `k` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_mixed_moment(
    m: *const LdModel,
    indices: *const usize,
    k: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let idx = read(indices, k, "indices")?;
        write_out(out, g.mixed_central_moment(idx)?, "out")
    })
}

/// Local dependence H at a point. When `phi_out` is not null it receives the
/// `dim` standardized deviations φ_i.
///
/// # Safety
/// `point` must hold `len` values; `h_out` must be writable; `phi_out` must be
/// null or hold `dim` writable values.
#[no_mangle]
pub unsafe extern "C" fn ld_eval(
    m: *const LdModel,
    point: *const f64,
    len: usize,
    h_out: *mut f64,
    phi_out: *mut f64,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let p = point_from(point, len, g.dim())?;
        if h_out.is_null() {
            return Err(null("h_out"));
        }
        let result = LocalDependence::new(g)?.h_nvariate(&p)?;
        if !phi_out.is_null() {
            ptr::copy_nonoverlapping(result.phi.phi.as_ptr(), phi_out, result.phi.phi.len());
        }
        h_out.write(result.h_value);
        Ok(())
    })
}

/// Evaluates H over a grid. Axes not listed in `ranges` must be listed in
/// `fixed_axes` with values in `fixed_values`. Output is row-major with the
/// first range varying slowest; `out_len` must be at least the product of
/// the range counts.
///
/// # Safety
/// Array arguments must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn ld_sweep(
    m: *const LdModel,
    fixed_axes: *const usize,
    fixed_values: *const f64,
    n_fixed: usize,
    ranges: *const LdRange,
    n_ranges: usize,
    out: *mut f64,
    out_len: usize,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let axes = read(fixed_axes, n_fixed, "fixed_axes")?;
        let values = read(fixed_values, n_fixed, "fixed_values")?;
        let ranges = read(ranges, n_ranges, "ranges")?;
        let fixed = axes.iter().copied().zip(values.iter().copied()).collect();
        let swept = ranges
            .iter()
            .map(|r| GridAxis {
                axis: r.axis,
                lo: r.lo,
                hi: r.hi,
                count: r.count,
            })
            .collect();
        let spec = GridSpec::new(g.dim(), fixed, swept)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < spec.node_count() {
            return Err(Fail(
                LdStatus::BufferTooSmall,
                format!(
                    "output needs {} values, buffer holds {out_len}",
                    spec.node_count()
                ),
            ));
        }
        let map = sweep(g, &spec)?;
        ptr::copy_nonoverlapping(map.values.as_ptr(), out, map.values.len());
        Ok(())
    })
}

/// Damped-Newton solve for the point where every conditional mean equals its
/// mean. Writes the `dim` coordinates to `point_out` and H there to `h_out`
/// (either may be null).
///
/// # Safety
/// `start` must hold `len` values; `point_out` must be null or hold `dim` values.
#[no_mangle]
pub unsafe extern "C" fn ld_solve_reference_point(
    m: *const LdModel,
    start: *const f64,
    len: usize,
    max_iter: usize,
    tol: f64,
    point_out: *mut f64,
    h_out: *mut f64,
) -> LdStatus {
    guard(|| {
        let g = model(m)?;
        let start = point_from(start, len, g.dim())?;
        let opts = SolverOptions {
            max_iter,
            tol,
            ..SolverOptions::default()
        };
        let rp = solve_reference_point(g, &start, opts)?;
        if !point_out.is_null() {
            ptr::copy_nonoverlapping(rp.point.as_ptr(), point_out, rp.point.len());
        }
        if !h_out.is_null() {
            h_out.write(rp.h_value);
        }
        Ok(())
    })
}
