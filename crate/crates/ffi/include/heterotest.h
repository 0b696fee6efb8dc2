#ifndef HETEROTEST_H
#define HETEROTEST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * What a model handle holds.
 */
typedef enum HtModelKind {
  HT_MODEL_KIND_SXM = 0,
  HT_MODEL_KIND_SYSTEM = 1,
  HT_MODEL_KIND_P_SYSTEM = 2,
} HtModelKind;

/**
 * Status codes returned by every fallible function.
 */
typedef enum HtStatus {
  HT_STATUS_OK = 0,
  HT_STATUS_NULL_POINTER = 1,
  HT_STATUS_INVALID_UTF8 = 2,
  HT_STATUS_PARSE = 3,
  /**
   * The model is ill-formed or fails the design-for-test conditions.
   */
  HT_STATUS_INVALID = 4,
  /**
   * Test or trace generation failed (for example a branch explosion).
   */
  HT_STATUS_GENERATION = 5,
  /**
   * The operation does not apply to this kind of model.
   */
  HT_STATUS_WRONG_KIND = 6,
  HT_STATUS_PANIC = 7,
} HtStatus;

/**
 * An opaque model handle.
 */
typedef struct HtModel HtModel;

/**
 * An opaque test suite handle.
 */
typedef struct HtSuite HtSuite;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null. The
 * pointer stays valid until the next call on this thread.
 */
const char *ht_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ht_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ht_string_free(char *s);

/**
 * Parses a model from JSON. Models with a `structure` key are P systems,
 * those with `components` communicating systems, anything else a stream
 * X-machine.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HtStatus ht_model_from_json(const char *json, struct HtModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`ht_model_from_json`] and not be freed twice.
 */
void ht_model_free(struct HtModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_model_kind(const struct HtModel *model, enum HtModelKind *out);

/**
 * Writes the validation report as JSON to `out`. A model with violations
 * still returns `Ok`; inspect the `violations` array.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_model_validate(const struct HtModel *model, char **out);

/**
 * Writes the design-for-test report as JSON: one object for a machine, an
 * array with one entry per component for a system.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_model_check_dft(const struct HtModel *model, char **out);

/**
 * Generates a W-method suite with `extra_states` extra states.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_generate_suite(const struct HtModel *model,
                                uint32_t extra_states,
                                struct HtSuite **out);

/**
 * Number of test cases in a suite, or 0 for null.
 *
 * # Safety
 * `suite` must be null or a live handle.
 */
size_t ht_suite_len(const struct HtSuite *suite);

/**
 * # Safety
 * `suite` must be a live handle and `out` writable.
 */
enum HtStatus ht_suite_to_json(const struct HtSuite *suite, char **out);

/**
 * Releases a suite. Null is ignored.
 *
 * # Safety
 * `suite` must come from [`ht_generate_suite`] and not be freed twice.
 */
void ht_suite_free(struct HtSuite *suite);

/**
 * Runs a P system for `depth` steps and writes the traces as a JSON
 * array. With `all_branches` nonzero every maximally parallel choice is
 * followed and `seed` is ignored.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_psystem_run(const struct HtModel *model,
                             uint32_t depth,
                             int32_t all_branches,
                             uint64_t seed,
                             char **out);

/**
 * Writes the rule-coverage test set of computations up to `depth` steps.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum HtStatus ht_psystem_coverage(const struct HtModel *model, uint32_t depth, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HETEROTEST_H */
