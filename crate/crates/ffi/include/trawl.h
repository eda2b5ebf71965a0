#ifndef TRAWL_H
#define TRAWL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum TrawlStatus {
  TRAWL_STATUS_OK = 0,
  TRAWL_STATUS_NULL_POINTER = 1,
  TRAWL_STATUS_DOMAIN = 2,
  TRAWL_STATUS_UNSUPPORTED_FAMILY = 3,
  TRAWL_STATUS_QUADRATURE = 4,
  TRAWL_STATUS_BUDGET = 5,
  TRAWL_STATUS_INSUFFICIENT_DATA = 6,
  TRAWL_STATUS_CONFIG = 7,
  TRAWL_STATUS_IO = 8,
  TRAWL_STATUS_BUFFER_TOO_SMALL = 9,
  TRAWL_STATUS_PANIC = 10,
} TrawlStatus;

/**
 * Opaque simulated ensemble.
 */
typedef struct TrawlEnsemble TrawlEnsemble;

/**
 * Opaque trawl geometry.
 */
typedef struct TrawlGeom TrawlGeom;

/**
 * Opaque Lévy seed.
 */
typedef struct TrawlSeed TrawlSeed;

/**
 * The four pieces `I1..I4` of the integrated-process cumulant.
 */
typedef struct TrawlComponents {
  double i1;
  double i2;
  double i3;
  double i4;
} TrawlComponents;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length excluding the
 * terminator; returns 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t trawl_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *trawl_version(void);

/**
 * Gamma trawl `g(x) = (1 + x)^(-alpha-1)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_geometry_new_gamma(double alpha, struct TrawlGeom **out);

/**
 * Exponential trawl `g(x) = exp(-lambda x)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_geometry_new_exponential(double lambda, struct TrawlGeom **out);

/**
 * # Safety
 * `geom` must be null or a handle from `trawl_geometry_new_*` not yet freed.
 */
void trawl_geometry_free(struct TrawlGeom *geom);

/**
 * `Leb(A)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_geometry_leb(const struct TrawlGeom *geom, double *out);

/**
 * `G(h)`, the measure of `A ∩ A_h`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_geometry_tail_mass(const struct TrawlGeom *geom, double h, double *out);

/**
 * `r(h) = G(h) / G(0)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_geometry_correlation(const struct TrawlGeom *geom, double h, double *out);

/**
 * Poisson seed with intensity `nu`. For every seed constructor, `centered`
 * subtracts the mean from the integrated process `X*`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_seed_new_poisson(double nu, bool centered, struct TrawlSeed **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_seed_new_gamma(double shape,
                                      double rate,
                                      bool centered,
                                      struct TrawlSeed **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_seed_new_gaussian(double mean,
                                         double variance,
                                         bool centered,
                                         struct TrawlSeed **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TrawlStatus trawl_seed_new_inverse_gaussian(double delta,
                                                 double gamma,
                                                 bool centered,
                                                 struct TrawlSeed **out);

/**
 * # Safety
 * `seed` must be null or a handle from `trawl_seed_new_*` not yet freed.
 */
void trawl_seed_free(struct TrawlSeed *seed);

/**
 * Raw cumulant `kappa_L^(m)` of the seed.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_seed_cumulant(const struct TrawlSeed *seed, uint32_t m, double *out);

/**
 * `I1..I4` for order `m` at horizon `t`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_integral_components(const struct TrawlGeom *geom,
                                           uint32_t m,
                                           double t,
                                           struct TrawlComponents *out);

/**
 * `kappa^(m)` of `X*(t)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_integrated_cumulant(const struct TrawlGeom *geom,
                                           const struct TrawlSeed *seed,
                                           uint32_t m,
                                           double t,
                                           double *out);

/**
 * Exact variance of the Riemann sum `delta * sum_{j<k} X(t_j)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_discrete_sum_variance(const struct TrawlGeom *geom,
                                             const struct TrawlSeed *seed,
                                             double delta,
                                             size_t k,
                                             double *out);

/**
 * Simulates `replications` trajectories on `t_k = k * delta`, `k = 0..=n`.
 * `threads = 0` uses the default pool. Results depend only on the
 * arguments, never on `threads`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_ensemble_run(const struct TrawlGeom *geom,
                                    const struct TrawlSeed *seed,
                                    double delta,
                                    size_t n,
                                    size_t replications,
                                    uint64_t master_seed,
                                    size_t threads,
                                    struct TrawlEnsemble **out);

/**
 * # Safety
 * `ens` must be null or a handle from `trawl_ensemble_run` not yet freed.
 */
void trawl_ensemble_free(struct TrawlEnsemble *ens);

/**
 * Number of replications (rows) and grid points (columns).
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_ensemble_shape(const struct TrawlEnsemble *ens, size_t *rows, size_t *cols);

/**
 * Copies `X` row-major (`rows * cols` values) into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum TrawlStatus trawl_ensemble_copy_x(const struct TrawlEnsemble *ens, double *buf, size_t len);

/**
 * Copies the centred Riemann sums `X*` row-major into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum TrawlStatus trawl_ensemble_copy_xstar(const struct TrawlEnsemble *ens,
                                           double *buf,
                                           size_t len);

/**
 * Pooled sample autocorrelation at `lag` grid steps with its standard error.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TrawlStatus trawl_ensemble_acf(const struct TrawlEnsemble *ens,
                                    size_t lag,
                                    double *value,
                                    double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAWL_H */
