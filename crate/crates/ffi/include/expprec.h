#ifndef EXPPREC_H
#define EXPPREC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum EpStatus {
  EP_STATUS_OK = 0,
  EP_STATUS_NULL_POINTER = 1,
  EP_STATUS_INVALID_ARGUMENT = 2,
  EP_STATUS_INVALID_MATRIX = 3,
  EP_STATUS_INSUFFICIENT_DATA = 4,
  EP_STATUS_DOMAIN = 5,
  EP_STATUS_UNDEFINED_ESTIMATOR = 6,
  EP_STATUS_CONTRACT = 7,
  EP_STATUS_METHOD_UNAVAILABLE = 8,
  EP_STATUS_PARSE = 9,
  EP_STATUS_IO = 10,
  EP_STATUS_ARCHIVE = 11,
  EP_STATUS_PANIC = 99,
} EpStatus;

/**
 * Precision measure selector.
 */
typedef enum EpMeasureKind {
  EP_MEASURE_KIND_L = 0,
  EP_MEASURE_KIND_G = 1,
  EP_MEASURE_KIND_A = 2,
} EpMeasureKind;

/**
 * Comparison method selector.
 */
typedef enum EpMethod {
  EP_METHOD_L = 0,
  EP_METHOD_G = 1,
  EP_METHOD_A = 2,
  EP_METHOD_PAIRED_VARIANCE = 3,
} EpMethod;

/**
 * Bias scenario selector for `ep_matrix_simulate`.
 */
typedef enum EpScenario {
  EP_SCENARIO_NONE = 0,
  EP_SCENARIO_MIXED = 1,
  EP_SCENARIO_EXTREME = 2,
} EpScenario;

/**
 * Opaque rating matrix.
 */
typedef struct EpMatrix EpMatrix;

/**
 * A measure value with its standard error.
 */
typedef struct EpMeasure {
  double value;
  double se;
  /**
   * Stimuli (g, a) or subjects (l) behind the estimate.
   */
  size_t basis_size;
} EpMeasure;

/**
 * Outcome of comparing two experiments.
 */
typedef struct EpComparison {
  /**
   * t statistic, or the smallest adjusted p-value for paired variance.
   */
  double statistic;
  /**
   * Welch degrees of freedom, or the number of MOS regions.
   */
  double df;
  double p_value;
  /**
   * 1 when `p_value <= alpha`.
   */
  int32_t significant;
} EpComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ep_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ep_version(void);

/**
 * Builds a matrix from `n_subjects * n_stimuli` subject-major ratings;
 * 0 marks an absent rating.
 *
 * # Safety
 * `ratings` must point to `n_subjects * n_stimuli` readable bytes and `out`
 * must be a valid pointer.
 */
enum EpStatus ep_matrix_new(size_t n_subjects,
                            size_t n_stimuli,
                            const uint8_t *ratings,
                            struct EpMatrix **out);

/**
 * Reads a `subject_id,stimulus_id,rating` CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
 */
enum EpStatus ep_matrix_from_csv(const char *path, struct EpMatrix **out);

/**
 * Simulates one experiment with 30 subjects and 21 equidistant stimuli.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EpStatus ep_matrix_simulate(double sigma,
                                 int32_t bias_scenario,
                                 double p,
                                 uint64_t seed,
                                 struct EpMatrix **out);

/**
 * Releases a matrix. NULL is ignored.
 *
 * # Safety
 * `m` must come from this library and must not be used afterwards.
 */
void ep_matrix_free(struct EpMatrix *m);

/**
 * Number of subjects and stimuli.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EpStatus ep_matrix_shape(const struct EpMatrix *m, size_t *n_subjects, size_t *n_stimuli);

/**
 * Rating of one cell; 0 when absent.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EpStatus ep_matrix_rating(const struct EpMatrix *m,
                               size_t subject,
                               size_t stimulus,
                               uint8_t *out);

/**
 * One precision measure (`EpMeasureKind` value).
 *
 * # Safety
 * All pointers must be valid.
 */
enum EpStatus ep_measure(const struct EpMatrix *m, int32_t kind, struct EpMeasure *out);

/**
 * Compares two experiments with one method (`EpMethod` value). The
 * paired-variance method uses the Holm correction.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EpStatus ep_compare(const struct EpMatrix *a,
                         const struct EpMatrix *b,
                         int32_t comparison_method,
                         double alpha,
                         struct EpComparison *out);

/**
 * Probabilities of the ratings 1..5 under QNorm(mu, sigma).
 *
 * # Safety
 * `out` must point to 5 writable doubles.
 */
enum EpStatus ep_qnorm_pmf(double mu, double sigma, double *out);

/**
 * SOS parameter implied by uncertainty `sigma` (21 equidistant stimuli, no
 * bias).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EpStatus ep_sigma_to_sos_a(double sigma, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPPREC_H */
