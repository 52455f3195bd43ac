#ifndef LOCALDEP_H
#define LOCALDEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Nonzero codes match the CLI exit codes where they overlap.
 */
typedef enum LdStatus {
  LD_STATUS_OK = 0,
  LD_STATUS_INVALID_INPUT = 2,
  LD_STATUS_COMPUTATION = 3,
  LD_STATUS_NO_CONVERGENCE = 4,
  LD_STATUS_NULL_POINTER = 5,
  LD_STATUS_BUFFER_TOO_SMALL = 6,
  LD_STATUS_PANIC = 7,
} LdStatus;

/**
 * Opaque model handle.
 */
typedef struct LdModel LdModel;

/**
 * One swept axis for `ld_sweep`: `count` values from `lo` to `hi` inclusive.
 */
typedef struct LdRange {
  uintptr_t axis;
  double lo;
  double hi;
  uintptr_t count;
} LdRange;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `ld_*` call on the same thread.
 */
const char *ld_last_error(void);

/**
 * Creates a Gaussian model from a mean of length `dim` and a row-major
 * `dim × dim` covariance.
 *
 * # Safety
 * `mean` and `cov` must point to `dim` and `dim * dim` values; `out` must be writable.
 */
enum LdStatus ld_model_new(uintptr_t dim,
                           const double *mean,
                           const double *cov,
                           struct LdModel **out);

/**
 * Creates a model from `{"mean": [...], "cov": [[...], ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LdStatus ld_model_from_json(const char *json, struct LdModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void ld_model_free(struct LdModel *m);

/**
 * Number of variables, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uintptr_t ld_model_dim(const struct LdModel *m);

/**
 * Joint density at a point.
 *
 * # Safety
 * `point` must hold `len` values; `out` must be writable.
 */
enum LdStatus ld_pdf(const struct LdModel *m, const double *point, uintptr_t len, double *out);

/**
 * `E(X_target | others = given)`, `given` listing the other `dim - 1`
 * coordinates in index order.
 *
 * # Safety
 * `given` must hold `len` values; `out` must be writable.
 */
enum LdStatus ld_conditional_mean(const struct LdModel *m,
                                  uintptr_t target,
                                  const double *given,
                                  uintptr_t len,
                                  double *out);

/**
 * Standardized mixed central moment over `k ≥ 2` distinct indices.
 *
 * # Safety
 * `indices` must hold `k` values; `out` must be writable.
 */
enum LdStatus ld_mixed_moment(const struct LdModel *m,
                              const uintptr_t *indices,
                              uintptr_t k,
                              double *out);

/**
 * Local dependence H at a point. When `phi_out` is not null it receives the
 * `dim` standardized deviations φ_i.
 *
 * # Safety
 * `point` must hold `len` values; `h_out` must be writable; `phi_out` must be
 * null or hold `dim` writable values.
 */
enum LdStatus ld_eval(const struct LdModel *m,
                      const double *point,
                      uintptr_t len,
                      double *h_out,
                      double *phi_out);

/**
 * Evaluates H over a grid. Axes not listed in `ranges` must be listed in
 * `fixed_axes` with values in `fixed_values`. Output is row-major with the
 * first range varying slowest; `out_len` must be at least the product of
 * the range counts.
 *
 * # Safety
 * Array arguments must hold the stated number of elements.
 */
enum LdStatus ld_sweep(const struct LdModel *m,
                       const uintptr_t *fixed_axes,
                       const double *fixed_values,
                       uintptr_t n_fixed,
                       const struct LdRange *ranges,
                       uintptr_t n_ranges,
                       double *out,
                       uintptr_t out_len);

/**
 * Damped-Newton solve for the point where every conditional mean equals its
 * mean. Writes the `dim` coordinates to `point_out` and H there to `h_out`
 * (either may be null).
 *
 * # Safety
 * `start` must hold `len` values; `point_out` must be null or hold `dim` values.
 */
enum LdStatus ld_solve_reference_point(const struct LdModel *m,
                                       const double *start,
                                       uintptr_t len,
                                       uintptr_t max_iter,
                                       double tol,
                                       double *point_out,
                                       double *h_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCALDEP_H */
