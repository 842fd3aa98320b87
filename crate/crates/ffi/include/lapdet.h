#ifndef LAPDET_H
#define LAPDET_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define LAPDET_SIDE_LEFT 1

#define LAPDET_SIDE_RIGHT 2

#define LAPDET_SIDE_BOTTOM 4

#define LAPDET_SIDE_TOP 8

#define LAPDET_SIDES_ALL 15

/**
 * Result of a call.
 */
typedef enum LapdetStatus {
  LAPDET_STATUS_OK = 0,
  /**
   * Invalid input: bad config, metric, domain, side mask or level list.
   */
  LAPDET_STATUS_CONFIG = 1,
  /**
   * Numeric failure: singular or indefinite operator, quadrature or fit failure, budget.
   */
  LAPDET_STATUS_NUMERIC = 2,
  /**
   * A required pointer argument was null.
   */
  LAPDET_STATUS_NULL_POINTER = 3,
  /**
   * Index out of range.
   */
  LAPDET_STATUS_OUT_OF_RANGE = 4,
  /**
   * Internal panic caught at the boundary.
   */
  LAPDET_STATUS_PANIC = 5,
} LapdetStatus;

/**
 * Experiment configuration: metric, domain, Dirichlet sides and base cells.
 */
typedef struct LapdetConfig LapdetConfig;

/**
 * Log-determinant series over subdivision levels.
 */
typedef struct LapdetSweep LapdetSweep;

/**
 * Coefficients of `c_bulk ε⁻² + c_boundary ε⁻¹ + c_log log ε + c_const`.
 */
typedef struct LapdetCoeffs {
  double c_bulk;
  double c_boundary;
  double c_log;
  double c_const;
  double residual;
} LapdetCoeffs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call
 * on the same thread.
 */
const char *lapdet_last_error(void);

/**
 * Library version as a static string.
 */
const char *lapdet_version(void);

/**
 * Identity metric on the unit square, all sides Dirichlet, one base cell.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum LapdetStatus lapdet_config_new_default(struct LapdetConfig **out);

/**
 * Builds a config from metric expressions, `domain = [x0, x1, y0, y1]`, a side mask and base
 * cell counts.
 *
 * # Safety
 * `gxx` and `gyy` must be NUL-terminated strings, `domain` must point to 4 doubles and `out`
 * must be writable.
 */
enum LapdetStatus lapdet_config_new(const char *gxx,
                                    const char *gyy,
                                    const double *domain,
                                    uint32_t sides,
                                    size_t base_nx,
                                    size_t base_ny,
                                    struct LapdetConfig **out);

/**
 * Loads a JSON or TOML config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum LapdetStatus lapdet_config_load(const char *path, struct LapdetConfig **out);

/**
 * # Safety
 * `cfg` must come from a `lapdet_config_*` constructor and not be used afterwards. Null is
 * ignored.
 */
void lapdet_config_free(struct LapdetConfig *cfg);

/**
 * Log-determinant of the Laplacian at one subdivision level of the base complex.
 *
 * # Safety
 * `cfg` must be a live handle; `out_logdet` and `out_n` must be writable.
 */
enum LapdetStatus lapdet_logdet(const struct LapdetConfig *cfg,
                                uint32_t level,
                                double *out_logdet,
                                size_t *out_n);

/**
 * Runs a sweep over `n_levels` strictly ascending levels.
 *
 * # Safety
 * `cfg` must be a live handle, `levels` must point to `n_levels` values and `out` be writable.
 */
enum LapdetStatus lapdet_sweep_run(const struct LapdetConfig *cfg,
                                   const uint32_t *levels,
                                   size_t n_levels,
                                   struct LapdetSweep **out);

/**
 * Number of entries in a sweep; 0 for null.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t lapdet_sweep_len(const struct LapdetSweep *s);

/**
 * Entry `i` of a sweep.
 *
 * # Safety
 * `s` must be a live handle and the output pointers writable.
 */
enum LapdetStatus lapdet_sweep_entry(const struct LapdetSweep *s,
                                     size_t i,
                                     uint32_t *out_level,
                                     double *out_epsilon,
                                     double *out_logdet);

/**
 * Unconstrained least-squares fit of the sweep against `{ε⁻², ε⁻¹, log ε, 1}`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum LapdetStatus lapdet_sweep_fit(const struct LapdetSweep *s, struct LapdetCoeffs *out);

/**
 * # Safety
 * `s` must come from [`lapdet_sweep_run`] and not be used afterwards. Null is ignored.
 */
void lapdet_sweep_free(struct LapdetSweep *s);

/**
 * Lattice logarithm with weights `(a, b)` at `(x, y)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum LapdetStatus lapdet_lattice_log(double a, double b, int64_t x, int64_t y, double *out);

/**
 * Largest relative difference between the dimer partition function of the doubled
 * `nx x ny` complex and the fermionic determinant, using the config's metric and domain.
 * `sides` overrides the config's Dirichlet sides when nonzero.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum LapdetStatus lapdet_dimer_check(const struct LapdetConfig *cfg,
                                     size_t nx,
                                     size_t ny,
                                     uint32_t sides,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAPDET_H */
