#ifndef RELOSC_H
#define RELOSC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum ReloscStatus {
  RELOSC_STATUS_OK = 0,
  RELOSC_STATUS_NULL_POINTER = 1,
  RELOSC_STATUS_INVALID_INPUT = 2,
  RELOSC_STATUS_INVALID_UTF8 = 3,
  RELOSC_STATUS_UNSTABLE = 4,
  RELOSC_STATUS_PRECONDITION = 5,
  RELOSC_STATUS_UNDECIDABLE = 6,
  RELOSC_STATUS_CAP_EXCEEDED = 7,
  RELOSC_STATUS_INTERNAL = 8,
} ReloscStatus;

/**
 * Opaque plant handle.
 */
typedef struct ReloscPlant ReloscPlant;

/**
 * Period range; `upper_convex` is 0 when the convex bound does not apply.
 */
typedef struct ReloscPeriodBounds {
  size_t lower;
  size_t upper_general;
  size_t upper_convex;
  size_t ps;
} ReloscPeriodBounds;

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *relosc_last_error(void);

/**
 * Parses a plant-spec JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ReloscStatus relosc_plant_from_json(const char *json, struct ReloscPlant **out);

/**
 * Plant with `g0(t) = gain * a^t`, delay `delay` and dead zone `dead_zone`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ReloscStatus relosc_plant_geometric(double a,
                                         double gain,
                                         size_t delay,
                                         double dead_zone,
                                         struct ReloscPlant **out);

/**
 * Releases a plant. NULL is ignored.
 *
 * # Safety
 * `plant` must come from a relosc constructor and not be used afterwards.
 */
void relosc_plant_free(struct ReloscPlant *plant);

/**
 * Delay after folding leading zero samples of the response.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_plant_delay(const struct ReloscPlant *plant, size_t *out);

/**
 * Checks whether `pattern` (entries in {-1, 0, 1}) reproduces itself through
 * the loop. When `waveform` is not NULL it receives `len` loop values
 * aligned with the pattern's canonical rotation.
 *
 * # Safety
 * `pattern` must point to `len` readable bytes, `waveform` to `len` writable
 * doubles or be NULL, `is_fixed` must be writable.
 */
enum ReloscStatus relosc_verify_fixed_point(const struct ReloscPlant *plant,
                                            const int8_t *pattern,
                                            size_t len,
                                            double *waveform,
                                            bool *is_fixed);

/**
 * Dead-zone threshold below which the subharmonic family exists.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_chi0_threshold(const struct ReloscPlant *plant, double *out);

/**
 * Whether the half-wave oscillation of period `2 Pd` exists.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_exists_2pd(const struct ReloscPlant *plant, bool *out);

/**
 * Smallest `t` at which the head of `g0` outweighs its tail.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_compute_ps(const struct ReloscPlant *plant, size_t *out);

/**
 * Period range of unimodal oscillations with `P >= Pd`; needs `Pd >= 1`.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_period_bounds(const struct ReloscPlant *plant,
                                       struct ReloscPeriodBounds *out);

/**
 * Full oscillation report as JSON. `pmax = 0` selects the default search
 * limit. The string must be released with `relosc_string_free`.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum ReloscStatus relosc_analyze_json(const struct ReloscPlant *plant, size_t pmax, char **out);

/**
 * Releases a string returned by relosc. NULL is ignored.
 *
 * # Safety
 * `s` must come from relosc and not be used afterwards.
 */
void relosc_string_free(char *s);

#endif  /* RELOSC_H */
