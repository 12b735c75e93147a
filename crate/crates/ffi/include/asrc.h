#ifndef ASRC_H
#define ASRC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AsrcStatus {
  ASRC_STATUS_OK = 0,
  ASRC_STATUS_NULL_POINTER = 1,
  ASRC_STATUS_INVALID_ARGUMENT = 2,
  ASRC_STATUS_DIMENSION_MISMATCH = 3,
  ASRC_STATUS_ZERO_COLUMN = 4,
  ASRC_STATUS_UNKNOWN_CLASS = 5,
  ASRC_STATUS_SINGULAR_GRAM = 6,
  ASRC_STATUS_NUMERICAL_DIVERGENCE = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  ASRC_STATUS_INTERNAL = 8,
} AsrcStatus;

typedef enum AsrcMethod {
  ASRC_METHOD_ASRC = 0,
  ASRC_METHOD_SRC = 1,
  ASRC_METHOD_CRC = 2,
  ASRC_METHOD_NN = 3,
  ASRC_METHOD_NFS = 4,
} AsrcMethod;

/**
 * A classifier fitted to a dictionary. Safe to share across threads for
 * concurrent `asrc_classify` calls.
 */
typedef struct AsrcClassifier AsrcClassifier;

/**
 * Labeled training samples.
 */
typedef struct AsrcDictionary AsrcDictionary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *asrc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *asrc_version(void);

/**
 * Builds a dictionary from an `m x n` column-major matrix and `n` class ids
 * (dense, starting at 0).
 *
 * # Safety
 * `data` holds `m * n` doubles, `labels` holds `n` entries, `out` is writable.
 */
enum AsrcStatus asrc_dictionary_new(const double *data,
                                    uintptr_t m,
                                    uintptr_t n,
                                    const uintptr_t *labels,
                                    struct AsrcDictionary **out);

/**
 * # Safety
 * `dict` is null or was returned by `asrc_dictionary_new` and not yet freed.
 */
void asrc_dictionary_free(struct AsrcDictionary *dict);

/**
 * Number of classes in `dict`, or 0 for a null handle.
 *
 * # Safety
 * `dict` is null or a live dictionary handle.
 */
uintptr_t asrc_dictionary_num_classes(const struct AsrcDictionary *dict);

/**
 * Fits a classifier. `weight` is lambda for ASRC/SRC and sigma for CRC; pass
 * a value `<= 0` for the default. Ignored by NN and NFS.
 *
 * # Safety
 * `dict` is a live dictionary handle and `out` is writable.
 */
enum AsrcStatus asrc_classifier_new(const struct AsrcDictionary *dict,
                                    enum AsrcMethod method,
                                    double weight,
                                    struct AsrcClassifier **out);

/**
 * # Safety
 * `clf` is null or was returned by `asrc_classifier_new` and not yet freed.
 */
void asrc_classifier_free(struct AsrcClassifier *clf);

/**
 * Classifies the length-`m` query `y`. Writes the class id to `class_out`
 * and, when `residuals_out` is non-null, one residual per class (the buffer
 * must hold `residuals_len >= num_classes` entries).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AsrcStatus asrc_classify(const struct AsrcClassifier *clf,
                              const double *y,
                              uintptr_t m,
                              uintptr_t *class_out,
                              double *residuals_out,
                              uintptr_t residuals_len);

/**
 * Trace-Lasso coding of `y` over the `m x n` matrix `x` (used as given, not
 * normalized) with default solver settings and weight `lambda`. Writes `n`
 * coefficients to `alpha_out`; `iterations_out` and `converged_out` may be null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AsrcStatus asrc_solve(const double *x,
                           uintptr_t m,
                           uintptr_t n,
                           const double *y,
                           double lambda,
                           double *alpha_out,
                           uintptr_t *iterations_out,
                           bool *converged_out);

/**
 * Sum of singular values of the `m x n` matrix.
 *
 * # Safety
 * `x` holds `m * n` doubles and `out` is writable.
 */
enum AsrcStatus asrc_trace_norm(const double *x, uintptr_t m, uintptr_t n, double *out);

/**
 * `||X Diag(alpha)||_*` for the `m x n` matrix `x` and length-`n` `alpha`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AsrcStatus asrc_correlation_regularizer(const double *x,
                                             uintptr_t m,
                                             uintptr_t n,
                                             const double *alpha,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASRC_H */
