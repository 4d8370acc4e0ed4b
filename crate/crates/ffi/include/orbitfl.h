#ifndef ORBITFL_H
#define ORBITFL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 1 to 3 match the CLI exit codes.
 */
typedef enum OrbitflStatus {
  ORBITFL_STATUS_OK = 0,
  ORBITFL_STATUS_CONFIG_ERROR = 1,
  ORBITFL_STATUS_RUNTIME_ERROR = 2,
  ORBITFL_STATUS_DEADLOCK = 3,
  ORBITFL_STATUS_NULL_POINTER = 4,
  ORBITFL_STATUS_INVALID_UTF8 = 5,
  ORBITFL_STATUS_OUT_OF_RANGE = 6,
  ORBITFL_STATUS_PANIC = 7,
} OrbitflStatus;

typedef enum OrbitflProtocol {
  ORBITFL_PROTOCOL_FED_ISL = 0,
  ORBITFL_PROTOCOL_FED_NON_ISL = 1,
} OrbitflProtocol;

/**
 * The outcome of one simulation.
 */
typedef struct OrbitflRun OrbitflRun;

/**
 * A validated scenario configuration.
 */
typedef struct OrbitflScenario OrbitflScenario;

/**
 * One evaluation point; traffic fields are cumulative.
 */
typedef struct OrbitflRecord {
  double sim_time_s;
  uint64_t epoch;
  double test_accuracy;
  double test_loss;
  uint64_t ps_down_msgs;
  uint64_t ps_down_bits;
  uint64_t ps_up_msgs;
  uint64_t ps_up_bits;
  uint64_t isl_msgs;
  uint64_t isl_bits;
  uint64_t fallback_hops;
  double epoch_duration_s;
} OrbitflRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Thread-local description of the last failure; empty after a success.
 * Valid until the next call on this thread.
 */
const char *orbitfl_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *orbitfl_version(void);

/**
 * Reference scenario with the given seed.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum OrbitflStatus orbitfl_scenario_new(uint64_t seed, struct OrbitflScenario **out);

/**
 * Scenario from TOML text; omitted keys take reference values.
 *
 * # Safety
 * `toml` must be null or a nul-terminated string; `out` as for
 * [`orbitfl_scenario_new`].
 */
enum OrbitflStatus orbitfl_scenario_from_toml(const char *toml, struct OrbitflScenario **out);

/**
 * # Safety
 * `scenario` must be null or a live handle.
 */
enum OrbitflStatus orbitfl_scenario_set_protocol(struct OrbitflScenario *scenario,
                                                 enum OrbitflProtocol protocol);

/**
 * Caps the number of epochs; zero is rejected.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
enum OrbitflStatus orbitfl_scenario_set_max_epochs(struct OrbitflScenario *scenario,
                                                   uint64_t epochs);

/**
 * Canonical TOML of the scenario, to be released with [`orbitfl_string_free`].
 *
 * # Safety
 * `scenario` must be null or a live handle; `out` must be null or writable.
 */
enum OrbitflStatus orbitfl_scenario_to_toml(const struct OrbitflScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void orbitfl_scenario_free(struct OrbitflScenario *scenario);

/**
 * Simulates the scenario to completion.
 *
 * # Safety
 * `scenario` must be null or a live handle; `out` must be null or writable.
 */
enum OrbitflStatus orbitfl_run(const struct OrbitflScenario *scenario, struct OrbitflRun **out);

/**
 * Number of records (one per completed epoch); zero for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t orbitfl_run_record_count(const struct OrbitflRun *run);

/**
 * # Safety
 * `run` must be null or a live handle; `out` must be null or writable.
 */
enum OrbitflStatus orbitfl_run_record(const struct OrbitflRun *run,
                                      size_t index,
                                      struct OrbitflRecord *out);

/**
 * Simulated time at which the run stopped; NaN for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
double orbitfl_run_end_time_s(const struct OrbitflRun *run);

/**
 * Writes the metrics CSV, led by a `# seed=<n>` line.
 *
 * # Safety
 * `run` must be null or a live handle; `path` null or nul-terminated.
 */
enum OrbitflStatus orbitfl_run_write_csv(const struct OrbitflRun *run, const char *path);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void orbitfl_run_free(struct OrbitflRun *run);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, not yet freed.
 */
void orbitfl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITFL_H */
