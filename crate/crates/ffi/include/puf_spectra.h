#ifndef PUF_SPECTRA_H
#define PUF_SPECTRA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_INCOMPARABLE = 3,
  PS_STATUS_DOMAIN = 4,
  PS_STATUS_CONFIG = 5,
  PS_STATUS_PARSE = 6,
  PS_STATUS_IO = 7,
  PS_STATUS_BUFFER_TOO_SMALL = 8,
  PS_STATUS_PANIC = 9,
} PsStatus;

/**
 * Opaque population of simulated PUF instances.
 */
typedef struct PsPopulation PsPopulation;

/**
 * Opaque majority-voted response table.
 */
typedef struct PsResponses PsResponses;

/**
 * Opaque correlation spectrum of one response bit.
 */
typedef struct PsSpectrum PsSpectrum;

/**
 * Simulation parameters; start from [`ps_params_default`].
 */
typedef struct PsParams {
  uint32_t n_stages;
  double delay_mean;
  double delay_sigma;
  double layout_sigma;
  double noise_sigma;
  uint64_t seed;
} PsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call on this thread.
 */
const char *ps_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ps_string_free(char *s);

/**
 * Coefficient `1 - i / 2^(m-1)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_coeff_from_mismatches(uint64_t i, uint32_t m, double *out);

/**
 * Probability of lattice coefficient `coeff` for a uniformly random ordered pair of m-variable functions.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_bucket_probability(double coeff,
                                    uint32_t m,
                                    double *out);

/**
 * Exact ordered-pair count at `coeff`, as a decimal string (free with [`ps_string_free`]).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_pair_count(double coeff, uint32_t m, char **out);

struct PsParams ps_params_default(void);

/**
 * Draws `count` instances.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum PsStatus ps_population_new(const struct PsParams *params,
                                size_t count,
                                struct PsPopulation **out);

/**
 * Copy of `pop` with a fault applied to every instance. `spec` uses the CLI form, e.g. `10:all:1`.
 *
 * # Safety
 * `pop` must be a live handle, `spec` a NUL-terminated string, `out` a valid pointer.
 */
enum PsStatus ps_population_inject_fault(const struct PsPopulation *pop,
                                         const char *spec,
                                         struct PsPopulation **out);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `pop` must be null or a live handle.
 */
size_t ps_population_len(const struct PsPopulation *pop);

/**
 * # Safety
 * `pop` must be null or a live handle; it is invalid afterwards.
 */
void ps_population_free(struct PsPopulation *pop);

/**
 * Evaluates `pop` on `n_challenges` random challenges drawn from `challenge_seed`, with `k`-fold majority voting.
 *
 * # Safety
 * `pop` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_collect(const struct PsPopulation *pop,
                         size_t n_challenges,
                         uint64_t challenge_seed,
                         size_t k,
                         struct PsResponses **out);

/**
 * Loads a CRP dump.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PsStatus ps_responses_read_crp(const char *path, struct PsResponses **out);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t ps_responses_instance_count(const struct PsResponses *r);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t ps_responses_challenge_count(const struct PsResponses *r);

/**
 * 4-bit response of instance position `instance` to challenge position `challenge`; bit 1 is the least significant.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_responses_get(const struct PsResponses *r,
                               size_t instance,
                               size_t challenge,
                               uint8_t *out);

/**
 * # Safety
 * `r` must be null or a live handle; it is invalid afterwards.
 */
void ps_responses_free(struct PsResponses *r);

/**
 * Spectrum of response bit `bit` (1..=4) over all unordered instance pairs.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_spectrum_build(const struct PsResponses *r,
                                uint32_t bit,
                                size_t buckets,
                                struct PsSpectrum **out);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t ps_spectrum_bucket_count(const struct PsSpectrum *s);

/**
 * Copies bucket counts into `buf`, which must hold at least [`ps_spectrum_bucket_count`] entries.
 *
 * # Safety
 * `s` must be a live handle and `buf` valid for `len` writes.
 */
enum PsStatus ps_spectrum_counts(const struct PsSpectrum *s, uint64_t *buf, size_t len);

/**
 * Mean and median pairwise coefficient.
 *
 * # Safety
 * `s` must be a live handle; `mean` and `median` valid pointers.
 */
enum PsStatus ps_spectrum_location(const struct PsSpectrum *s, double *mean, double *median);

/**
 * # Safety
 * `s` must be null or a live handle; it is invalid afterwards.
 */
void ps_spectrum_free(struct PsSpectrum *s);

/**
 * Compares `test` against `reference` on all four response bits.
 *
 * A NaN `kl0` calibrates the KL threshold from the reference population.
 * `out_json` receives the report (free with [`ps_string_free`]); `out_fail`
 * is set to 1 if any bit fails and 0 otherwise.
 *
 * # Safety
 * Handles must be live; `out_json` and `out_fail` valid pointers.
 */
enum PsStatus ps_compare(const struct PsResponses *reference,
                         const struct PsResponses *test,
                         size_t buckets,
                         size_t segments,
                         double t0,
                         double kl0,
                         char **out_json,
                         int32_t *out_fail);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PUF_SPECTRA_H */
