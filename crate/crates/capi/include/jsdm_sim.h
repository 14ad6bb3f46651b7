#ifndef JSDM_SIM_H
#define JSDM_SIM_H

/* Auto-generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible API call.
 */
typedef enum JsdmJsdmStatus {
  JSDM_JSDM_STATUS_OK = 0,
  JSDM_JSDM_STATUS_NULL_ARGUMENT = 1,
  JSDM_JSDM_STATUS_INVALID_UTF8 = 2,
  JSDM_JSDM_STATUS_CONFIG_ERROR = 3,
  JSDM_JSDM_STATUS_BD_CHECK_FAILED = 4,
  JSDM_JSDM_STATUS_INVARIANT_VIOLATION = 5,
  JSDM_JSDM_STATUS_IO_ERROR = 6,
  JSDM_JSDM_STATUS_INTERNAL_ERROR = 7,
} JsdmJsdmStatus;

/**
 * Opaque loaded-scenario handle.
 */
typedef struct JsdmJsdmScenario JsdmJsdmScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads and validates a TOML scenario file. On success writes an owned
 * handle into `out`; release it with `jsdm_scenario_free`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid
 * pointer-to-pointer.
 */
enum JsdmJsdmStatus jsdm_scenario_load(const char *path, struct JsdmJsdmScenario **out);

/**
 * Releases a scenario handle. NULL is a no-op.
 *
 * # Safety
 * `handle` must have come from `jsdm_scenario_load` and not have been
 * freed already.
 */
void jsdm_scenario_free(struct JsdmJsdmScenario *handle);

/**
 * Runs every cell of the scenario and writes the results CSV to
 * `csv_path`. Pass 0 for `seed`/`trials`/`threads` to use the
 * scenario's own values (respectively all cores).
 *
 * # Safety
 * `handle` must be a live scenario handle; `csv_path` a valid
 * NUL-terminated string.
 */
enum JsdmJsdmStatus jsdm_scenario_run_to_csv(const struct JsdmJsdmScenario *handle,
                                             const char *csv_path,
                                             uint64_t seed,
                                             uint64_t trials,
                                             uint32_t threads);

/**
 * Runs the analytical verification suite with the given seed. Returns
 * `Ok` when every check passes, `InvariantViolation` otherwise.
 */
enum JsdmJsdmStatus jsdm_verify(uint64_t seed);

/**
 * Copies the last error message (NUL-terminated, possibly truncated)
 * into `buf` and returns the full message length in bytes, excluding
 * the NUL. A zero-length buffer only queries the length.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes unless `len` is 0.
 */
uintptr_t jsdm_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *jsdm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JSDM_SIM_H */
