#ifndef HSDISP_H
#define HSDISP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_INPUT = 2,
  HS_STATUS_DEGENERATE = 3,
  HS_STATUS_INFEASIBLE_RADII = 4,
  HS_STATUS_PARSE = 5,
  HS_STATUS_PACKING_INVARIANT = 6,
  HS_STATUS_BUDGET_EXCEEDED = 7,
  HS_STATUS_NUMERICAL = 8,
  HS_STATUS_IO = 9,
  HS_STATUS_OUT_OF_RANGE = 10,
  HS_STATUS_PANIC = 11,
} HsStatus;

/**
 * Disjoint ball packing of the flat torus.
 */
typedef struct HsPacking HsPacking;

/**
 * Two-phase core–coating profile.
 */
typedef struct HsProfile HsProfile;

/**
 * Equivalent conductivity and first-corrector coefficients.
 */
typedef struct HsFirstCorrector {
  double m;
  double b1t;
  double b2t;
  double ct;
} HsFirstCorrector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next call into this library.
 */
const char *hs_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *hs_version(void);

/**
 * Creates a profile; `*out` receives a handle to free with `hs_profile_free`.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum HsStatus hs_profile_new(double alpha,
                             double beta,
                             double theta,
                             uint32_t dim,
                             struct HsProfile **out);

/**
 * # Safety
 * `profile` must be null or a handle from `hs_profile_new` not yet freed.
 */
void hs_profile_free(struct HsProfile *profile);

/**
 * Equivalent conductivity m and the radial profile coefficients.
 *
 * # Safety
 * `profile` must be a live handle and `out` valid for writing.
 */
enum HsStatus hs_homogenize(const struct HsProfile *profile, struct HsFirstCorrector *out);

/**
 * Per-ball dispersion density J of the profile.
 *
 * # Safety
 * `profile` must be a live handle and `out` valid for writing.
 */
enum HsStatus hs_dispersion_density(const struct HsProfile *profile, double *out);

/**
 * Dispersion coefficient d_PHS of `packing` filled with copies of `profile`.
 *
 * # Safety
 * Both handles must be live and `out` valid for writing.
 */
enum HsStatus hs_dispersion(const struct HsProfile *profile,
                            const struct HsPacking *packing,
                            double *out);

/**
 * Greedy Apollonian packing with `max_balls` balls (default search settings).
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum HsStatus hs_packing_apollonian(uint32_t dim, size_t max_balls, struct HsPacking **out);

/**
 * Loads and validates a packing file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` valid for writing a pointer.
 */
enum HsStatus hs_packing_load(const char *path, struct HsPacking **out);

/**
 * Writes a packing file atomically.
 *
 * # Safety
 * `packing` must be a live handle and `path` a nul-terminated string.
 */
enum HsStatus hs_packing_save(const struct HsPacking *packing, const char *path);

/**
 * # Safety
 * `packing` must be null or a live handle.
 */
void hs_packing_free(struct HsPacking *packing);

/**
 * Number of balls, or 0 for a null handle.
 *
 * # Safety
 * `packing` must be null or a live handle.
 */
size_t hs_packing_len(const struct HsPacking *packing);

/**
 * Radius of ball `index` (balls are sorted by decreasing radius).
 *
 * # Safety
 * `packing` must be a live handle and `out` valid for writing.
 */
enum HsStatus hs_packing_radius(const struct HsPacking *packing, size_t index, double *out);

/**
 * Covered volume fraction.
 *
 * # Safety
 * `packing` must be a live handle and `out` valid for writing.
 */
enum HsStatus hs_packing_coverage(const struct HsPacking *packing, double *out);

/**
 * Bracket [i_lower, i_upper] of the dispersion functional's minimum from a packing.
 *
 * # Safety
 * `packing` must be a live handle; both outputs valid for writing.
 */
enum HsStatus hs_functional_bracket(const struct HsPacking *packing,
                                    double *i_lower,
                                    double *i_upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HSDISP_H */
