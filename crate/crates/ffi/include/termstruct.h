#ifndef TERMSTRUCT_H
#define TERMSTRUCT_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  /**
   * Schema or JSON parse failure.
   */
  TS_STATUS_SCHEMA = 2,
  /**
   * Numeric or model failure.
   */
  TS_STATUS_NUMERIC = 3,
  /**
   * An audit or test did not pass.
   */
  TS_STATUS_AUDIT = 4,
  /**
   * A required pointer argument was null.
   */
  TS_STATUS_NULL_ARGUMENT = 5,
  /**
   * A string argument was not valid UTF-8.
   */
  TS_STATUS_UTF8 = 6,
} TsStatus;

/**
 * Opaque scenario handle: the parsed file plus the built model.
 */
typedef struct TsScenario TsScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or null. The pointer is valid until
 * the next failing call on the same thread; do not free it.
 */
const char *ts_last_error(void);

/**
 * Library version as a static string.
 */
const char *ts_version(void);

/**
 * Parse a scenario from JSON and build its model.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer; the
 * returned handle must be freed with `ts_scenario_free`.
 */
enum TsStatus ts_scenario_parse(const char *json, struct TsScenario **out);

/**
 * Load a scenario from a file path.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_scenario_load(const char *path, struct TsScenario **out);

/**
 * Free a scenario handle.
 *
 * # Safety
 * `handle` must come from `ts_scenario_parse`/`ts_scenario_load` and must
 * not be used afterwards.
 */
void ts_scenario_free(struct TsScenario *handle);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must come from a `*_json` out-parameter of this library.
 */
void ts_string_free(char *s);

/**
 * Solve the drift conditions and install the consistent drift in place.
 *
 * # Safety
 * `handle` must be a valid scenario handle.
 */
enum TsStatus ts_construct_drift(struct TsScenario *handle);

/**
 * Run the residual audit over `paths` simulated paths; the report comes
 * back as JSON in `json_out`. Returns `Audit` when any residual exceeds
 * 1e-8.
 *
 * # Safety
 * `handle` must be valid and `json_out` a valid pointer.
 */
enum TsStatus ts_residual_audit(const struct TsScenario *handle,
                                uint64_t seed,
                                uint64_t paths,
                                char **json_out);

/**
 * Monte Carlo martingale test; the report comes back as JSON.
 * Returns `Audit` when max |z| exceeds the scenario threshold.
 *
 * # Safety
 * `handle` must be valid and `json_out` a valid pointer.
 */
enum TsStatus ts_mc_test(const struct TsScenario *handle,
                         uint64_t seed,
                         uint64_t paths,
                         char **json_out);

/**
 * Max pathwise discrepancy among the three price representations.
 *
 * # Safety
 * `handle` must be valid and `max_error_out` a valid pointer.
 */
enum TsStatus ts_representation_test(const struct TsScenario *handle,
                                     uint64_t seed,
                                     uint64_t paths,
                                     double *max_error_out);

/**
 * Full-enumeration oracle for two-period specs; tables as JSON.
 *
 * # Safety
 * `handle` must be valid and `json_out` a valid pointer.
 */
enum TsStatus ts_oracle(const struct TsScenario *handle, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TERMSTRUCT_H */
