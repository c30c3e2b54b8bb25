#ifndef PAIRGEN_H
#define PAIRGEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_PARSE = 3,
  PG_STATUS_OUT_OF_RANGE = 4,
  PG_STATUS_MODEL_MISMATCH = 5,
  PG_STATUS_GENERATE = 6,
  PG_STATUS_UNSOUND = 7,
  PG_STATUS_PANIC = 8,
} PgStatus;

/**
 * A parsed factor system with its constraints.
 */
typedef struct PgModel PgModel;

/**
 * A test suite bound to the model it was created from.
 */
typedef struct PgSuite PgSuite;

/**
 * Generation settings. Obtain defaults from `pg_options_default`.
 */
typedef struct PgOptions {
  bool weighted;
  /**
   * Share of warm-start rows retained, in [0, 1].
   */
  double alpha;
  double step_time_limit_s;
  double minimize_time_limit_s;
  uint64_t seed;
} PgOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *pg_last_error(void);

struct PgOptions pg_options_default(void);

/**
 * Parses model text (factor lines plus `AVOID:` and `MUST:` lines).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum PgStatus pg_model_parse(const char *text, struct PgModel **out);

/**
 * # Safety
 * `model` must come from `pg_model_parse` and not be freed twice. Null is ignored.
 */
void pg_model_free(struct PgModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (which yields 0).
 */
size_t pg_model_factor_count(const struct PgModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PgStatus pg_model_level_count(const struct PgModel *model, size_t factor, size_t *out);

/**
 * Runs the full pipeline. `warm` may be null; when given it must be a suite
 * over the same model. `opts` may be null for defaults.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum PgStatus pg_generate(const struct PgModel *model,
                          const struct PgOptions *opts,
                          const struct PgSuite *warm,
                          struct PgSuite **out);

/**
 * Reads a CSV suite (header row of factor names) against `model`.
 *
 * # Safety
 * `model` must be live, `csv` a valid string and `out` writable.
 */
enum PgStatus pg_suite_from_csv(const struct PgModel *model, const char *csv, struct PgSuite **out);

/**
 * # Safety
 * `suite` must come from this library and not be freed twice. Null is ignored.
 */
void pg_suite_free(struct PgSuite *suite);

/**
 * # Safety
 * `suite` must be a live handle or null (which yields 0).
 */
size_t pg_suite_len(const struct PgSuite *suite);

/**
 * True when generation fell back to a non-proven step or a non-minimal
 * reduction.
 *
 * # Safety
 * `suite` must be a live handle or null (which yields false).
 */
bool pg_suite_degraded(const struct PgSuite *suite);

/**
 * Level index of `factor` in row `row`.
 *
 * # Safety
 * `suite` must be live and `out` writable.
 */
enum PgStatus pg_suite_level(const struct PgSuite *suite, size_t row, size_t factor, size_t *out);

/**
 * Writes the suite as CSV with level names. Free the result with
 * `pg_string_free`.
 *
 * # Safety
 * `suite` must be live and `out` writable.
 */
enum PgStatus pg_suite_to_csv(const struct PgSuite *suite, char **out);

/**
 * Checks full coverage of achievable pairs, must inclusion and avoid
 * cleanliness. Returns `Ok` with `*sound` set either way.
 *
 * # Safety
 * Handles must be live and `sound` writable.
 */
enum PgStatus pg_verify(const struct PgModel *model, const struct PgSuite *suite, bool *sound);

/**
 * Removes redundant rows from a sound suite by exact set cover.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum PgStatus pg_minimize(const struct PgModel *model,
                          const struct PgSuite *suite,
                          double time_limit_s,
                          struct PgSuite **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void pg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRGEN_H */
