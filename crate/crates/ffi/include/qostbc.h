#ifndef QOSTBC_H
#define QOSTBC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QostbcStatus {
  QOSTBC_STATUS_OK = 0,
  QOSTBC_STATUS_NULL_POINTER = 1,
  QOSTBC_STATUS_INVALID_ARGUMENT = 2,
  QOSTBC_STATUS_UNKNOWN_CODE = 3,
  QOSTBC_STATUS_UNSUPPORTED_MODULATION = 4,
  QOSTBC_STATUS_DIMENSION = 5,
  QOSTBC_STATUS_BUDGET = 6,
  QOSTBC_STATUS_INTERNAL = 7,
} QostbcStatus;

/**
 * Opaque code handle.
 */
typedef struct QostbcCode QostbcCode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qostbc_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *qostbc_last_error(void);

/**
 * Builds a catalog code such as `"Q4_LT"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QostbcStatus qostbc_code_build(const char *name, struct QostbcCode **out);

/**
 * Parses a code from its JSON form; the grouping is rediscovered at `tol`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QostbcStatus qostbc_code_from_json(const char *json, double tol, struct QostbcCode **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `code` must come from this library and not have been freed already.
 */
void qostbc_code_free(struct QostbcCode *code);

/**
 * Block length `t`, transmit antennas `nt` and complex symbols `k`.
 *
 * # Safety
 * `code` must be a live handle; the out pointers must be writable.
 */
enum QostbcStatus qostbc_code_dims(const struct QostbcCode *code, size_t *t, size_t *nt, size_t *k);

/**
 * Size of the largest symbol group, in real symbols.
 *
 * # Safety
 * `code` must be a live handle and `out` writable.
 */
enum QostbcStatus qostbc_code_group_size(const struct QostbcCode *code, size_t *out);

/**
 * Code as JSON; free the result with `qostbc_string_free`.
 *
 * # Safety
 * `code` must be a live handle and `out` writable.
 */
enum QostbcStatus qostbc_code_to_json(const struct QostbcCode *code, char **out);

/**
 * Diversity product with `m`-QAM (`m` ∈ {4, 16, 64, 256}).
 *
 * # Safety
 * `code` must be a live handle; `zeta` and `full_diversity` writable.
 */
enum QostbcStatus qostbc_diversity_product(const struct QostbcCode *code,
                                           uint32_t m,
                                           double *zeta,
                                           bool *full_diversity);

/**
 * Encodes `2K` real symbols `[Re x; Im x]` into the `T×Nt` code matrix,
 * written row-major into `out_re` and `out_im` (each `out_len = T·Nt` long).
 *
 * # Safety
 * `s` must point to `s_len` doubles; `out_re`/`out_im` to `out_len` doubles.
 */
enum QostbcStatus qostbc_code_encode(const struct QostbcCode *code,
                                     const double *s,
                                     size_t s_len,
                                     double *out_re,
                                     double *out_im,
                                     size_t out_len);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void qostbc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QOSTBC_H */
