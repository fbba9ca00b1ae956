#ifndef QFALS_H
#define QFALS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum QfStatus {
  QF_STATUS_OK = 0,
  QF_STATUS_NULL_POINTER = 1,
  QF_STATUS_INVALID_ARGUMENT = 2,
  QF_STATUS_INVALID_UTF8 = 3,
  QF_STATUS_INVALID_INPUT = 4,
  QF_STATUS_IO = 5,
  QF_STATUS_PANIC = 6,
} QfStatus;

/**
 * Hypothesis families reachable from C.
 */
typedef enum QfFamily {
  /**
   * `dim_a`: dimension.
   */
  QF_FAMILY_PURITY = 0,
  /**
   * `dim_a`: dimension, `dim_b`: number of copies.
   */
  QF_FAMILY_PURITY_N_COPIES = 1,
  /**
   * `dim_a ≥ dim_b`.
   */
  QF_FAMILY_MAX_ENTANGLED = 2,
  /**
   * `dim_a`: input, `dim_b`: output.
   */
  QF_FAMILY_ATOMIC = 3,
  /**
   * `dim_a`: input, `dim_b`: output.
   */
  QF_FAMILY_ISOMETRIC = 4,
} QfFamily;

/**
 * Dense complex matrix.
 */
typedef struct QfMatrix QfMatrix;

/**
 * Parsed and typechecked circuit program.
 */
typedef struct QfProgram QfProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *qf_last_error(void);

/**
 * Library version string (static storage).
 */
const char *qf_version(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qf_string_free(char *s);

/**
 * Builds a `rows × cols` matrix from `2·rows·cols` doubles holding
 * interleaved real and imaginary parts in row-major order.
 *
 * # Safety
 * `data` must point to `2·rows·cols` readable doubles; `out` must be writable.
 */
enum QfStatus qf_matrix_new(size_t rows, size_t cols, const double *data, struct QfMatrix **out);

/**
 * Parses a matrix from its JSON form `{"rows","cols","data":[[re,im],...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum QfStatus qf_matrix_from_json(const char *json, struct QfMatrix **out);

/**
 * JSON form of `m`; release with [`qf_string_free`]. NULL on failure.
 *
 * # Safety
 * `m` must be a live matrix handle or NULL.
 */
char *qf_matrix_to_json(const struct QfMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle or NULL.
 */
size_t qf_matrix_rows(const struct QfMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle or NULL.
 */
size_t qf_matrix_cols(const struct QfMatrix *m);

/**
 * Reads entry `(row, col)`.
 *
 * # Safety
 * `m` must be a live handle; `re` and `im` must be writable.
 */
enum QfStatus qf_matrix_get(const struct QfMatrix *m,
                            size_t row,
                            size_t col,
                            double *re,
                            double *im);

/**
 * # Safety
 * `m` must come from this library and not have been freed.
 */
void qf_matrix_free(struct QfMatrix *m);

/**
 * Purifies the density matrix `rho` into a rank-one state on `A ⊗ E` with
 * `dim E = dim A`.
 *
 * # Safety
 * `rho` must be a live handle; `out` must be writable.
 */
enum QfStatus qf_purify(const struct QfMatrix *rho, struct QfMatrix **out);

/**
 * Haar twirl of `x` on tensor factor `factor` of `dim_a ⊗ dim_b`.
 *
 * # Safety
 * `x` must be a live handle; `out` must be writable.
 */
enum QfStatus qf_twirl(const struct QfMatrix *x,
                       size_t dim_a,
                       size_t dim_b,
                       size_t factor,
                       struct QfMatrix **out);

/**
 * Dilates an instrument given as JSON (an array of outcomes, each an array
 * of Kraus matrices) and reports the largest per-outcome Choi distance of
 * the rebuilt instrument.
 *
 * # Safety
 * `instrument_json` must be a NUL-terminated string; `error` must be writable.
 */
enum QfStatus qf_dilation_round_trip(const char *instrument_json, double *error);

/**
 * Smallest eigenvalue of the analytic family average and whether it exceeds
 * `tol` (then no nonzero falsifier exists).
 *
 * # Safety
 * `lambda_min` and `unfalsifiable` must be writable.
 */
enum QfStatus qf_witness(enum QfFamily kind,
                         size_t dim_a,
                         size_t dim_b,
                         double tol,
                         double *lambda_min,
                         bool *unfalsifiable);

/**
 * Alternating-projection search for a nonzero falsifier. `*falsifier` is set
 * to a new matrix handle, or NULL when none was found; `*residual` receives
 * the final residual.
 *
 * # Safety
 * `falsifier` and `residual` must be writable.
 */
enum QfStatus qf_search(enum QfFamily kind,
                        size_t dim_a,
                        size_t dim_b,
                        uint64_t seed,
                        size_t max_iter,
                        struct QfMatrix **falsifier,
                        double *residual);

/**
 * Loads and typechecks a `.qc` program; referenced files resolve next to it.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QfStatus qf_program_load(const char *path, struct QfProgram **out);

/**
 * Probability of the closed run `run`.
 *
 * # Safety
 * `p` must be a live handle, `run` a NUL-terminated string and
 * `probability` writable.
 */
enum QfStatus qf_program_probability(const struct QfProgram *p,
                                     const char *run,
                                     double *probability);

/**
 * State prepared by the open run `run`.
 *
 * # Safety
 * `p` must be a live handle, `run` a NUL-terminated string and `out` writable.
 */
enum QfStatus qf_program_state(const struct QfProgram *p, const char *run, struct QfMatrix **out);

/**
 * # Safety
 * `p` must come from this library and not have been freed.
 */
void qf_program_free(struct QfProgram *p);

/**
 * Default validation tolerance of the library.
 */
double qf_default_tol(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFALS_H */
