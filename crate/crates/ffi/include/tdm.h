#ifndef TDM_H
#define TDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdmStatus {
  TDM_STATUS_OK = 0,
  TDM_STATUS_NULL_POINTER = 1,
  TDM_STATUS_INVALID_MATRIX = 2,
  TDM_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The solver stopped without a verdict; bounds are still available.
   */
  TDM_STATUS_UNDECIDED = 4,
  TDM_STATUS_SOLVER_ERROR = 5,
  TDM_STATUS_OUT_OF_RANGE = 6,
  TDM_STATUS_PANIC = 7,
} TdmStatus;

typedef enum TdmMode {
  TDM_MODE_TDM = 0,
  TDM_MODE_BCM = 1,
} TdmMode;

typedef enum TdmMethod {
  TDM_METHOD_AUTO = 0,
  TDM_METHOD_FULL = 1,
  TDM_METHOD_COLGEN = 2,
  TDM_METHOD_SYMMETRIC = 3,
} TdmMethod;

/**
 * Validated input matrix.
 */
typedef struct TdmMatrix TdmMatrix;

/**
 * Outcome of [`tdm_check`].
 */
typedef struct TdmVerdict TdmVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *tdm_last_error(void);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *tdm_status_str(enum TdmStatus status);

/**
 * Sets the process-wide comparison tolerance. Must be positive and finite.
 */
enum TdmStatus tdm_set_tolerance(double tau);

double tdm_tolerance(void);

/**
 * Copies and validates a row-major `d × d` matrix.
 *
 * # Safety
 * `entries` must point to `d * d` readable doubles and `out` to writable
 * storage for one pointer.
 */
enum TdmStatus tdm_matrix_new(size_t d,
                              const double *entries,
                              enum TdmMode mode,
                              struct TdmMatrix **out);

/**
 * Releases a matrix. Null is ignored.
 *
 * # Safety
 * `m` must come from [`tdm_matrix_new`] and not have been freed.
 */
void tdm_matrix_free(struct TdmMatrix *m);

/**
 * Dimension of `m`, or 0 for null.
 *
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t tdm_matrix_dim(const struct TdmMatrix *m);

/**
 * Decides membership. On [`TdmStatus::Ok`] or [`TdmStatus::Undecided`] a
 * verdict handle is stored in `out`; otherwise `out` is set to null.
 *
 * # Safety
 * `m` must be a live matrix handle and `out` writable.
 */
enum TdmStatus tdm_check(const struct TdmMatrix *m, enum TdmMethod method, struct TdmVerdict **out);

/**
 * Releases a verdict. Null is ignored.
 *
 * # Safety
 * `v` must come from [`tdm_check`] and not have been freed.
 */
void tdm_verdict_free(struct TdmVerdict *v);

/**
 * 1 for a member, 0 for a non-member, −1 when undecided or `v` is null.
 *
 * # Safety
 * `v` must be null or a live verdict handle.
 */
int32_t tdm_verdict_member(const struct TdmVerdict *v);

/**
 * Number of atoms in the membership certificate (0 when there is none).
 *
 * # Safety
 * `v` must be null or a live verdict handle.
 */
size_t tdm_verdict_certificate_len(const struct TdmVerdict *v);

/**
 * Atom `i` of the certificate: bit `k` of `bits` is coordinate `k` of the
 * vertex.
 *
 * # Safety
 * `v` must be a live verdict handle; `bits` and `weight` writable.
 */
enum TdmStatus tdm_verdict_certificate_atom(const struct TdmVerdict *v,
                                            size_t i,
                                            uint64_t *bits,
                                            double *weight);

/**
 * Length of the Farkas ray (0 when there is none).
 *
 * # Safety
 * `v` must be null or a live verdict handle.
 */
size_t tdm_verdict_farkas_len(const struct TdmVerdict *v);

/**
 * Copies the Farkas ray into `buf`, which must hold at least
 * [`tdm_verdict_farkas_len`] doubles.
 *
 * # Safety
 * `v` must be a live verdict handle and `buf` writable for `len` doubles.
 */
enum TdmStatus tdm_verdict_farkas(const struct TdmVerdict *v, double *buf, size_t len);

/**
 * The verdict as JSON, valid for the lifetime of `v`.
 *
 * # Safety
 * `v` must be null or a live verdict handle.
 */
const char *tdm_verdict_json(const struct TdmVerdict *v);

/**
 * Smallest off-diagonal value of a `d`-dimensional equi-correlation BCM with
 * diagonal `alpha`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdmStatus tdm_equi_beta_lower(double alpha, size_t d, double *out);

/**
 * Largest cross-sector value `γ` for a two-sector TDM.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdmStatus tdm_two_sector_gamma_upper(double alpha,
                                          double beta,
                                          size_t d1,
                                          size_t d2,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDM_H */
