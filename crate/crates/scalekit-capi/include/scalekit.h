#ifndef SCALEKIT_H
#define SCALEKIT_H

/* Generated by cbindgen from scalekit-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of a call. Nonzero values match the CLI exit codes where a
 * counterpart exists.
 */
typedef enum SkStatus {
  SK_STATUS_OK = 0,
  SK_STATUS_INVALID_CONFIG = 2,
  SK_STATUS_INADMISSIBLE_STEP = 3,
  SK_STATUS_NUMERICAL_RANGE = 4,
  SK_STATUS_NULL_ARGUMENT = 5,
  SK_STATUS_PANIC = 6,
} SkStatus;

/**
 * Opaque scale-table handle.
 */
typedef struct SkTable SkTable;

/**
 * Opaque model handle.
 */
typedef struct SkTriplet SkTriplet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sk_version(void);

/**
 * Message of the most recent failure on this thread, or NULL if none.
 */
const char *sk_last_error(void);

/**
 * Parse a model from a TOML document containing a `[model]` section (the
 * same schema the CLI accepts) and return an owned handle.
 *
 * # Safety
 * `toml_text` must be a valid NUL-terminated string; `out` must be a
 * valid pointer.
 */
enum SkStatus sk_triplet_from_toml(const char *toml_text, struct SkTriplet **out);

/**
 * Release a model handle. NULL is a no-op.
 *
 * # Safety
 * `t` must be a pointer previously returned by `sk_triplet_from_toml`.
 */
void sk_triplet_free(struct SkTriplet *t);

/**
 * Laplace exponent of the model at a real argument `beta >= 0`.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_psi(const struct SkTriplet *t, double beta, double *out);

/**
 * Largest root of psi = q.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_phi(const struct SkTriplet *t, double q, double *out);

/**
 * Build W and Z tables on the grid {0, h, ..., n h}.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_table_build(const struct SkTriplet *t,
                             double q,
                             double h,
                             size_t n,
                             struct SkTable **out);

/**
 * Release a table handle. NULL is a no-op.
 *
 * # Safety
 * `t` must be a pointer previously returned by `sk_table_build`.
 */
void sk_table_free(struct SkTable *t);

/**
 * Number of grid entries (n + 1). Returns 0 for NULL.
 *
 * # Safety
 * `t` must be a valid table pointer or NULL.
 */
size_t sk_table_len(const struct SkTable *t);

/**
 * Grid step of the table. Returns NaN for NULL.
 *
 * # Safety
 * `t` must be a valid table pointer or NULL.
 */
double sk_table_h(const struct SkTable *t);

/**
 * Index shift applied when evaluating W at a point (0 or 1).
 *
 * # Safety
 * `t` must be a valid table pointer or NULL.
 */
uint8_t sk_table_delta0(const struct SkTable *t);

/**
 * Raw W table entry at a grid index.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_table_w(const struct SkTable *t, size_t index, double *out);

/**
 * Z value (1 + the cumulative part) at a grid index.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_table_z(const struct SkTable *t, size_t index, double *out);

/**
 * W evaluated at a continuous grid point, with the delta0 index shift.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_table_eval_w(const struct SkTable *t, double x, double *out);

/**
 * Z evaluated at a continuous grid point (no shift).
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum SkStatus sk_table_eval_z(const struct SkTable *t, double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCALEKIT_H */
