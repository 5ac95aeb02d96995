#ifndef COARSEKIT_H
#define COARSEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first four agree with the CLI exit codes.
 */
typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_VERIFICATION_FAILED = 1,
  CK_STATUS_INFEASIBLE = 2,
  CK_STATUS_MALFORMED = 3,
  CK_STATUS_NULL_POINTER = 4,
  CK_STATUS_UTF8 = 5,
  CK_STATUS_INTERNAL = 6,
} CkStatus;

/**
 * A metric space.
 */
typedef struct CkSpace CkSpace;

/**
 * A finite window of a space.
 */
typedef struct CkWindow CkWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *ck_last_error(void);

/**
 * The library version as a static string.
 */
const char *ck_version(void);

/**
 * Builds a space from a JSON specification such as `{"kind":"free_group","rank":2}`.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` a valid pointer.
 */
enum CkStatus ck_space_from_json(const char *spec, struct CkSpace **out);

/**
 * # Safety
 * `space` must come from [`ck_space_from_json`] and not be used afterwards. Null is ignored.
 */
void ck_space_free(struct CkSpace *space);

/**
 * Distance between two points given in the space's JSON point encoding.
 *
 * # Safety
 * All pointers must be valid; `x` and `y` nul-terminated.
 */
enum CkStatus ck_space_dist(const struct CkSpace *space,
                            const char *x,
                            const char *y,
                            uint64_t *out);

/**
 * The ball of `radius` around `center` (JSON point), or around the base point when `center` is null.
 *
 * # Safety
 * `space` and `out` must be valid; `center` null or nul-terminated.
 */
enum CkStatus ck_window_ball(const struct CkSpace *space,
                             const char *center,
                             uint64_t radius,
                             struct CkWindow **out);

/**
 * Number of points in the window; 0 for null.
 *
 * # Safety
 * `window` must be null or valid.
 */
size_t ck_window_len(const struct CkWindow *window);

/**
 * # Safety
 * `window` must come from [`ck_window_ball`] and not be used afterwards. Null is ignored.
 */
void ck_window_free(struct CkWindow *window);

/**
 * Scale-`r` components of the window as a JSON document; free it with [`ck_string_free`].
 *
 * # Safety
 * `window` and `out` must be valid.
 */
enum CkStatus ck_components_json(const struct CkWindow *window, uint64_t r, char **out);

/**
 * Re-verifies a certificate document. Returns `CK_STATUS_OK` or
 * `CK_STATUS_VERIFICATION_FAILED`; the report is written to `report` when it is not null.
 *
 * # Safety
 * `document` must be nul-terminated; `report` null or valid.
 */
enum CkStatus ck_verify_json(const char *document, char **report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ck_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COARSEKIT_H */
