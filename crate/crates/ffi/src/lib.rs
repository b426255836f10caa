//! C ABI for the sparse tensor decomposition pipeline.
//!
//! The surface follows the usual opaque-handle pattern: tensors and
//! decomposition results are boxed behind `GeoHopcaTensor` / `GeoHopcaResult`
//! pointers, every fallible call returns a [`GeoHopcaStatus`] code, and the
//! last failure message on the calling thread is available through
//! [`geohopca_last_error_message`]. The matching header is generated into
//! `include/geohopca.h` at build time.
//!
//! Element order is column-major (first index fastest) everywhere, matching
//! the NPY files the library reads and writes. Modes are 1-based.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use geohopca::io::npy;
use geohopca::select::SelectorStatus;
use geohopca::shopca::{sparse_geo_hopca, DecompositionResult, EtaSpec, ShopcaConfig};
use geohopca::tensor::{DenseTensor, Shape};
use geohopca::Error as LibError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeoHopcaStatus {
    GeohopcaOk = 0,
    GeohopcaNullPointer = 1,
    GeohopcaInvalidArgument = 2,
    GeohopcaIoError = 3,
    GeohopcaNumericError = 4,
    GeohopcaInfeasible = 5,
    GeohopcaPanic = 6,
}

use GeoHopcaStatus::*;

/// Opaque dense tensor handle.
pub struct GeoHopcaTensor {
    inner: DenseTensor,
}

/// Opaque decomposition result handle.
pub struct GeoHopcaResult {
    inner: DecompositionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &LibError) -> GeoHopcaStatus {
    match err {
        LibError::Io(_) | LibError::Format { .. } => GeohopcaIoError,
        LibError::EigenNoConvergence | LibError::NodeBudgetExhausted { .. } => GeohopcaNumericError,
        LibError::InMode { source, .. } => status_of(source),
        _ => GeohopcaInvalidArgument,
    }
}

fn fail(err: LibError) -> GeoHopcaStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn guard<F: FnOnce() -> GeoHopcaStatus>(body: F) -> GeoHopcaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            GeohopcaPanic
        }
    }
}

/// Message of the last failure on this thread; valid until the next failing
/// call from the same thread. Never null.
#[no_mangle]
pub extern "C" fn geohopca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn path_from(ptr_path: *const c_char) -> Result<PathBuf, GeoHopcaStatus> {
    if ptr_path.is_null() {
        set_error("null path");
        return Err(GeohopcaNullPointer);
    }
    match CStr::from_ptr(ptr_path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(GeohopcaInvalidArgument)
        }
    }
}

/// Builds a tensor from `ndim` dimensions and `prod(dims)` column-major
/// doubles. The data is copied.
///
/// # Safety
/// `dims` must point to `ndim` values and `data` to their product; `out`
/// must be a valid location to store the new handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_create(
    dims: *const usize,
    ndim: usize,
    data: *const f64,
    out: *mut *mut GeoHopcaTensor,
) -> GeoHopcaStatus {
    guard(|| {
        if dims.is_null() || data.is_null() || out.is_null() {
            set_error("null argument");
            return GeohopcaNullPointer;
        }
        let dims = std::slice::from_raw_parts(dims, ndim).to_vec();
        let shape = match Shape::new(dims) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let values = std::slice::from_raw_parts(data, shape.len()).to_vec();
        match DenseTensor::new(shape, values) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(GeoHopcaTensor { inner: t }));
                GeohopcaOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Reads an NPY file of doubles.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid store location.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_read_npy(
    path: *const c_char,
    out: *mut *mut GeoHopcaTensor,
) -> GeoHopcaStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output handle");
            return GeohopcaNullPointer;
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match npy::read_tensor_file(&path) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(GeoHopcaTensor { inner: t }));
                GeohopcaOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the tensor as a canonical NPY file.
///
/// # Safety
/// `tensor` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_write_npy(
    tensor: *const GeoHopcaTensor,
    path: *const c_char,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(tensor) = tensor.as_ref() else {
            set_error("null tensor");
            return GeohopcaNullPointer;
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match npy::write_tensor_file(&path, &tensor.inner) {
            Ok(()) => GeohopcaOk,
            Err(e) => fail(e),
        }
    })
}

/// Number of modes; 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_ndim(tensor: *const GeoHopcaTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.inner.shape().order())
}

/// Copies the dimensions into `dims_out` (length `ndim`).
///
/// # Safety
/// `dims_out` must hold at least `geohopca_tensor_ndim` slots.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_dims(
    tensor: *const GeoHopcaTensor,
    dims_out: *mut usize,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(tensor) = tensor.as_ref() else {
            set_error("null tensor");
            return GeohopcaNullPointer;
        };
        if dims_out.is_null() {
            set_error("null output buffer");
            return GeohopcaNullPointer;
        }
        let dims = tensor.inner.shape().dims();
        std::slice::from_raw_parts_mut(dims_out, dims.len()).copy_from_slice(dims);
        GeohopcaOk
    })
}

/// Total element count; 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_len(tensor: *const GeoHopcaTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.inner.shape().len())
}

/// Copies the column-major elements into `data_out`.
///
/// # Safety
/// `data_out` must hold at least `geohopca_tensor_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_copy_data(
    tensor: *const GeoHopcaTensor,
    data_out: *mut f64,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(tensor) = tensor.as_ref() else {
            set_error("null tensor");
            return GeohopcaNullPointer;
        };
        if data_out.is_null() {
            set_error("null output buffer");
            return GeohopcaNullPointer;
        }
        let data = tensor.inner.data();
        std::slice::from_raw_parts_mut(data_out, data.len()).copy_from_slice(data);
        GeohopcaOk
    })
}

/// Releases a tensor handle; null is a no-op.
///
/// # Safety
/// `tensor` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn geohopca_tensor_free(tensor: *mut GeoHopcaTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Runs the sparse decomposition.
///
/// `ranks` and `sparsity` hold one value per mode. `eta` may be null for the
/// a-priori automatic tolerance, or point to one value per mode. `max_cuts`
/// and `node_budget` of 0 select the defaults. Returns `GeohopcaInfeasible`
/// when any mode's selection ends infeasible (no handle is produced).
///
/// # Safety
/// Pointer arguments must satisfy the stated lengths; `out` must be a valid
/// store location.
#[no_mangle]
pub unsafe extern "C" fn geohopca_decompose(
    tensor: *const GeoHopcaTensor,
    ranks: *const usize,
    sparsity: *const usize,
    eta: *const f64,
    max_cuts: usize,
    node_budget: u64,
    parallel: c_int,
    out: *mut *mut GeoHopcaResult,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(tensor) = tensor.as_ref() else {
            set_error("null tensor");
            return GeohopcaNullPointer;
        };
        if ranks.is_null() || sparsity.is_null() || out.is_null() {
            set_error("null argument");
            return GeohopcaNullPointer;
        }
        let order = tensor.inner.shape().order();
        let ranks = std::slice::from_raw_parts(ranks, order).to_vec();
        let sparsity = std::slice::from_raw_parts(sparsity, order).to_vec();
        let mut config = ShopcaConfig::new(ranks, sparsity);
        if !eta.is_null() {
            config.eta = EtaSpec::PerMode(std::slice::from_raw_parts(eta, order).to_vec());
        }
        if max_cuts > 0 {
            config.max_cuts = max_cuts;
        }
        if node_budget > 0 {
            config.node_budget = node_budget;
        }
        config.parallel_modes = parallel != 0;
        match sparse_geo_hopca(&tensor.inner, &config) {
            Ok(result) => {
                if result
                    .statuses
                    .iter()
                    .any(|s| *s == SelectorStatus::Infeasible)
                {
                    set_error("one or more modes ended infeasible");
                    return GeohopcaInfeasible;
                }
                *out = Box::into_raw(Box::new(GeoHopcaResult { inner: result }));
                GeohopcaOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of modes in a result; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_order(result: *const GeoHopcaResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.factors.len())
}

/// The a-priori error bound of the run.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_bound(result: *const GeoHopcaResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.bound)
}

/// Reconstruction error of the selected columns of one 1-based mode; NaN on
/// a bad handle or mode.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_eta(
    result: *const GeoHopcaResult,
    mode: usize,
) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.inner.eta_achieved.get(mode.wrapping_sub(1)))
        .copied()
        .unwrap_or(f64::NAN)
}

/// Selector status of one mode: 0 converged, 1 cut budget exhausted,
/// 2 infeasible, -1 on a bad handle or mode.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_mode_status(
    result: *const GeoHopcaResult,
    mode: usize,
) -> c_int {
    match result
        .as_ref()
        .and_then(|r| r.inner.statuses.get(mode.wrapping_sub(1)))
    {
        Some(SelectorStatus::Converged) => 0,
        Some(SelectorStatus::CutBudgetExhausted) => 1,
        Some(SelectorStatus::Infeasible) => 2,
        None => -1,
    }
}

/// Factor row count of one mode (0 on a bad handle or mode).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_factor_rows(
    result: *const GeoHopcaResult,
    mode: usize,
) -> usize {
    result
        .as_ref()
        .and_then(|r| r.inner.factors.get(mode.wrapping_sub(1)))
        .map_or(0, |f| f.rows())
}

/// Factor column count of one mode (0 on a bad handle or mode).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_factor_cols(
    result: *const GeoHopcaResult,
    mode: usize,
) -> usize {
    result
        .as_ref()
        .and_then(|r| r.inner.factors.get(mode.wrapping_sub(1)))
        .map_or(0, |f| f.cols())
}

/// Copies one mode's factor, column-major, into `data_out`.
///
/// # Safety
/// `data_out` must hold `rows * cols` doubles for that mode.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_factor_copy(
    result: *const GeoHopcaResult,
    mode: usize,
    data_out: *mut f64,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(result) = result.as_ref() else {
            set_error("null result");
            return GeohopcaNullPointer;
        };
        if data_out.is_null() {
            set_error("null output buffer");
            return GeohopcaNullPointer;
        }
        let Some(factor) = result.inner.factors.get(mode.wrapping_sub(1)) else {
            set_error("mode out of range");
            return GeohopcaInvalidArgument;
        };
        std::slice::from_raw_parts_mut(data_out, factor.data().len())
            .copy_from_slice(factor.data());
        GeohopcaOk
    })
}

/// Number of selected columns in one mode's support (0 on bad input).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_support_len(
    result: *const GeoHopcaResult,
    mode: usize,
) -> usize {
    result
        .as_ref()
        .and_then(|r| r.inner.supports.get(mode.wrapping_sub(1)))
        .map_or(0, |s| s.len())
}

/// Copies one mode's 1-based selected column indices into `indices_out`.
///
/// # Safety
/// `indices_out` must hold `geohopca_result_support_len` slots.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_support_copy(
    result: *const GeoHopcaResult,
    mode: usize,
    indices_out: *mut usize,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(result) = result.as_ref() else {
            set_error("null result");
            return GeohopcaNullPointer;
        };
        if indices_out.is_null() {
            set_error("null output buffer");
            return GeohopcaNullPointer;
        }
        let Some(support) = result.inner.supports.get(mode.wrapping_sub(1)) else {
            set_error("mode out of range");
            return GeohopcaInvalidArgument;
        };
        std::slice::from_raw_parts_mut(indices_out, support.len())
            .copy_from_slice(support.indices());
        GeohopcaOk
    })
}

/// Clones the core tensor into a fresh tensor handle.
///
/// # Safety
/// `out` must be a valid store location.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_core(
    result: *const GeoHopcaResult,
    out: *mut *mut GeoHopcaTensor,
) -> GeoHopcaStatus {
    guard(|| {
        let Some(result) = result.as_ref() else {
            set_error("null result");
            return GeohopcaNullPointer;
        };
        if out.is_null() {
            set_error("null output handle");
            return GeohopcaNullPointer;
        }
        *out = Box::into_raw(Box::new(GeoHopcaTensor {
            inner: result.inner.core.clone(),
        }));
        GeohopcaOk
    })
}

/// Releases a result handle; null is a no-op.
///
/// # Safety
/// `result` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn geohopca_result_free(result: *mut GeoHopcaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
