/* C interface for the geohopca sparse tensor decomposition library. */

#ifndef GEOHOPCA_H
#define GEOHOPCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum GeoHopcaStatus {
  GEOHOPCA_OK = 0,
  GEOHOPCA_NULL_POINTER = 1,
  GEOHOPCA_INVALID_ARGUMENT = 2,
  GEOHOPCA_IO_ERROR = 3,
  GEOHOPCA_NUMERIC_ERROR = 4,
  GEOHOPCA_INFEASIBLE = 5,
  GEOHOPCA_PANIC = 6,
} GeoHopcaStatus;

// Opaque decomposition result handle.
typedef struct GeoHopcaResult GeoHopcaResult;

// Opaque dense tensor handle.
typedef struct GeoHopcaTensor GeoHopcaTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; valid until the next failing
// call from the same thread. Never null.
const char *geohopca_last_error_message(void);

// Builds a tensor from `ndim` dimensions and `prod(dims)` column-major
// doubles. The data is copied.
//
// # Safety
// `dims` must point to `ndim` values and `data` to their product; `out`
// must be a valid location to store the new handle.
enum GeoHopcaStatus geohopca_tensor_create(const size_t *dims,
                                           size_t ndim,
                                           const double *data,
                                           struct GeoHopcaTensor **out);

// Reads an NPY file of doubles.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid store location.
enum GeoHopcaStatus geohopca_tensor_read_npy(const char *path, struct GeoHopcaTensor **out);

// Writes the tensor as a canonical NPY file.
//
// # Safety
// `tensor` must be a live handle and `path` a NUL-terminated string.
enum GeoHopcaStatus geohopca_tensor_write_npy(const struct GeoHopcaTensor *tensor,
                                              const char *path);

// Number of modes; 0 for a null handle.
//
// # Safety
// `tensor` must be null or a live handle.
size_t geohopca_tensor_ndim(const struct GeoHopcaTensor *tensor);

// Copies the dimensions into `dims_out` (length `ndim`).
//
// # Safety
// `dims_out` must hold at least `geohopca_tensor_ndim` slots.
enum GeoHopcaStatus geohopca_tensor_dims(const struct GeoHopcaTensor *tensor, size_t *dims_out);

// Total element count; 0 for a null handle.
//
// # Safety
// `tensor` must be null or a live handle.
size_t geohopca_tensor_len(const struct GeoHopcaTensor *tensor);

// Copies the column-major elements into `data_out`.
//
// # Safety
// `data_out` must hold at least `geohopca_tensor_len` doubles.
enum GeoHopcaStatus geohopca_tensor_copy_data(const struct GeoHopcaTensor *tensor,
                                              double *data_out);

// Releases a tensor handle; null is a no-op.
//
// # Safety
// `tensor` must be null or an unreleased handle from this library.
void geohopca_tensor_free(struct GeoHopcaTensor *tensor);

// Runs the sparse decomposition.
//
// `ranks` and `sparsity` hold one value per mode. `eta` may be null for the
// a-priori automatic tolerance, or point to one value per mode. `max_cuts`
// and `node_budget` of 0 select the defaults. Returns `GeohopcaInfeasible`
// when any mode's selection ends infeasible (no handle is produced).
//
// # Safety
// Pointer arguments must satisfy the stated lengths; `out` must be a valid
// store location.
enum GeoHopcaStatus geohopca_decompose(const struct GeoHopcaTensor *tensor,
                                       const size_t *ranks,
                                       const size_t *sparsity,
                                       const double *eta,
                                       size_t max_cuts,
                                       uint64_t node_budget,
                                       int parallel,
                                       struct GeoHopcaResult **out);

// Number of modes in a result; 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
size_t geohopca_result_order(const struct GeoHopcaResult *result);

// The a-priori error bound of the run.
//
// # Safety
// `result` must be null or a live handle.
double geohopca_result_bound(const struct GeoHopcaResult *result);

// Reconstruction error of the selected columns of one 1-based mode; NaN on
// a bad handle or mode.
//
// # Safety
// `result` must be null or a live handle.
double geohopca_result_eta(const struct GeoHopcaResult *result, size_t mode);

// Selector status of one mode: 0 converged, 1 cut budget exhausted,
// 2 infeasible, -1 on a bad handle or mode.
//
// # Safety
// `result` must be null or a live handle.
int geohopca_result_mode_status(const struct GeoHopcaResult *result, size_t mode);

// Factor row count of one mode (0 on a bad handle or mode).
//
// # Safety
// `result` must be null or a live handle.
size_t geohopca_result_factor_rows(const struct GeoHopcaResult *result, size_t mode);

// Factor column count of one mode (0 on a bad handle or mode).
//
// # Safety
// `result` must be null or a live handle.
size_t geohopca_result_factor_cols(const struct GeoHopcaResult *result, size_t mode);

// Copies one mode's factor, column-major, into `data_out`.
//
// # Safety
// `data_out` must hold `rows * cols` doubles for that mode.
enum GeoHopcaStatus geohopca_result_factor_copy(const struct GeoHopcaResult *result,
                                                size_t mode,
                                                double *data_out);

// Number of selected columns in one mode's support (0 on bad input).
//
// # Safety
// `result` must be null or a live handle.
size_t geohopca_result_support_len(const struct GeoHopcaResult *result, size_t mode);

// Copies one mode's 1-based selected column indices into `indices_out`.
//
// # Safety
// `indices_out` must hold `geohopca_result_support_len` slots.
enum GeoHopcaStatus geohopca_result_support_copy(const struct GeoHopcaResult *result,
                                                 size_t mode,
                                                 size_t *indices_out);

// Clones the core tensor into a fresh tensor handle.
//
// # Safety
// `out` must be a valid store location.
enum GeoHopcaStatus geohopca_result_core(const struct GeoHopcaResult *result,
                                         struct GeoHopcaTensor **out);

// Releases a result handle; null is a no-op.
//
// # Safety
// `result` must be null or an unreleased handle from this library.
void geohopca_result_free(struct GeoHopcaResult *result);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GEOHOPCA_H */
