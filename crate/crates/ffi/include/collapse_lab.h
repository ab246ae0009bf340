#ifndef COLLAPSE_LAB_H
#define COLLAPSE_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClStatus {
  CL_STATUS_OK = 0,
  CL_STATUS_NULL_POINTER = 1,
  CL_STATUS_INVALID_ARGUMENT = 2,
  CL_STATUS_DOMAIN = 3,
  CL_STATUS_CAPACITY = 4,
  CL_STATUS_BASIS_MISMATCH = 5,
  CL_STATUS_BUFFER_TOO_SMALL = 6,
  CL_STATUS_INTERNAL = 7,
  CL_STATUS_PANIC = 8,
} ClStatus;

/**
 * Opaque run configuration: step size, seed, sequencing and worker count.
 */
typedef struct ClConfig ClConfig;

/**
 * Opaque state vector.
 */
typedef struct ClState ClState;

typedef struct ClBellReport {
  size_t n_detectors;
  uint64_t trials;
  double delta;
  uint64_t count_consistent;
  uint64_t count_collapse_signature;
  double r_sup;
  double collapse_fraction;
  double r_sup_lo;
  double r_sup_hi;
  uint64_t absorbed_trials;
} ClBellReport;

typedef struct ClWalkReport {
  double p0;
  double delta;
  uint64_t trials;
  uint64_t absorbed_interacting;
  double absorption;
  double absorption_lo;
  double absorption_hi;
  double mean_steps;
  double steps_se;
  double expected_steps;
} ClWalkReport;

typedef struct ClEmziReport {
  uint64_t trials;
  double r_branch;
  double delta;
  double p_ss;
  double p_aa;
  double p_sa;
  double p_as;
  double p_noninteracting;
  double total_interacting;
  double cross_fraction;
  double cross_fraction_se;
  double analytic_cross_fraction;
  double alternative_cross_fraction;
  double sampled_cross_fraction;
  double sampled_cross_fraction_se;
} ClEmziReport;

typedef struct ClEprReport {
  uint64_t trials;
  size_t chain_len;
  uint64_t b_up_unmeasured;
  uint64_t b_up_measured;
  uint64_t anticorrelated_measured;
  double tv_distance;
  double threshold;
} ClEprReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread; empty after a successful call. The
 * pointer stays valid until the next call on the same thread.
 */
const char *cl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cl_version(void);

/**
 * Creates a configuration. `workers == 0` uses the default thread pool.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ClStatus cl_config_new(double delta,
                            uint64_t master_seed,
                            bool same_s,
                            size_t workers,
                            struct ClConfig **out);

/**
 * # Safety
 * `config` must be null or a handle from [`cl_config_new`] not yet freed.
 */
void cl_config_free(struct ClConfig *config);

/**
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum ClStatus cl_run_bell_parity(const struct ClConfig *config,
                                 size_t n_detectors,
                                 uint64_t trials,
                                 struct ClBellReport *out);

/**
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum ClStatus cl_run_walk(const struct ClConfig *config,
                          double p0,
                          uint64_t trials,
                          struct ClWalkReport *out);

/**
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum ClStatus cl_run_emzi(const struct ClConfig *config,
                          double r_branch,
                          uint64_t trials,
                          struct ClEmziReport *out);

/**
 * Runs the singlet pair with and without the `a`-side chain.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum ClStatus cl_run_epr(const struct ClConfig *config,
                         size_t chain_len,
                         uint64_t trials,
                         struct ClEprReport *out);

/**
 * Closed-form cross fraction and its alternative normalization.
 *
 * # Safety
 * Both output pointers must be valid.
 */
enum ClStatus cl_emzi_analytic(double r_branch, double *cross_fraction, double *alternative);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum ClStatus cl_expected_collapse_steps(double p0, double delta, double *out);

/**
 * Subject plus `n_detectors` detectors in the correlated initial state.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ClStatus cl_state_initial(size_t n_detectors, struct ClState **out);

/**
 * # Safety
 * `state` must be null or a handle from [`cl_state_initial`] not yet freed.
 */
void cl_state_free(struct ClState *state);

/**
 * Number of particles, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t cl_state_n_particles(const struct ClState *state);

/**
 * # Safety
 * `state` must be a live handle.
 */
enum ClStatus cl_state_controlled_flip(struct ClState *state, size_t detector);

/**
 * Toggles the basis of each listed particle.
 *
 * # Safety
 * `state` must be a live handle; `particles` must point to `len` values
 * (it may be null when `len` is 0).
 */
enum ClStatus cl_state_change_basis(struct ClState *state, const size_t *particles, size_t len);

/**
 * Copies the `2^n` Born probabilities into `out`.
 *
 * # Safety
 * `state` must be a live handle and `out` must point to `len` doubles.
 */
enum ClStatus cl_state_born_probabilities(const struct ClState *state, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLAPSE_LAB_H */
