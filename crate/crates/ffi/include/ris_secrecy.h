#ifndef RIS_SECRECY_H
#define RIS_SECRECY_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum RisStatus {
  RIS_STATUS_OK = 0,
  RIS_STATUS_NULL_POINTER = 1,
  RIS_STATUS_INVALID_UTF8 = 2,
  /**
   * Scenario values out of range.
   */
  RIS_STATUS_VALIDATION = 3,
  /**
   * Malformed document, unknown key or unusable override.
   */
  RIS_STATUS_CONFIG = 4,
  RIS_STATUS_IO = 5,
  /**
   * Row index past the end of a table.
   */
  RIS_STATUS_OUT_OF_RANGE = 6,
  /**
   * Argument outside a function's domain.
   */
  RIS_STATUS_DOMAIN = 7,
  RIS_STATUS_PANIC = 8,
} RisStatus;

/**
 * Aggregated results of one run.
 */
typedef struct RisResultTable RisResultTable;

/**
 * A scenario document plus any overrides applied so far.
 */
typedef struct RisScenario RisScenario;

/**
 * Numbers of one result row. NaN marks a field that does not apply.
 */
typedef struct RisRowStats {
  /**
   * Axis value; +inf for unquantized on a bits axis, NaN for a model axis.
   */
  double axis;
  /**
   * Phase bits; -1 when unquantized.
   */
  int32_t bits;
  /**
   * 1 for the practical amplitude model, 0 for ideal.
   */
  int32_t practical;
  double gamma;
  double mu;
  double mean_cs;
  double ci_low;
  double ci_high;
  double sop;
  double intercept;
  double spsc;
  double coverage;
  double see;
  /**
   * +inf when unattainable, NaN when not computed.
   */
  double secure_power_dbm;
  uint64_t trials;
  uint64_t prenull_failures;
  uint64_t seed;
} RisRowStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ris_last_error(void);

/**
 * Library version, NUL-terminated, static.
 */
const char *ris_version(void);

/**
 * Parses a TOML scenario document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RisStatus ris_scenario_from_toml(const char *text, struct RisScenario **out);

/**
 * Loads a shipped preset (`fig8a`, `presets/fig10`, ...) or a scenario file path.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RisStatus ris_scenario_load(const char *name, struct RisScenario **out);

/**
 * Applies one `key=value` override, with the same rules as `--set`.
 * The scenario is unchanged when the call fails.
 *
 * # Safety
 * `scenario` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum RisStatus ris_scenario_set(struct RisScenario *scenario, const char *key, const char *value);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void ris_scenario_free(struct RisScenario *scenario);

/**
 * Validates the scenario and runs its sweep on `workers` threads (0 = all).
 *
 * # Safety
 * `scenario` must come from this library and `out` be a writable pointer.
 */
enum RisStatus ris_scenario_run(const struct RisScenario *scenario,
                                uint32_t workers,
                                struct RisResultTable **out);

/**
 * Number of rows; 0 for a null table.
 *
 * # Safety
 * `table` must be null or come from this library.
 */
size_t ris_table_row_count(const struct RisResultTable *table);

/**
 * Copies row `index` into `out`.
 *
 * # Safety
 * `table` must come from this library and `out` be writable.
 */
enum RisStatus ris_table_row(const struct RisResultTable *table,
                             size_t index,
                             struct RisRowStats *out);

/**
 * Renders the table as CSV into a new string; free it with [`ris_string_free`].
 *
 * # Safety
 * `table` must come from this library and `out` be writable.
 */
enum RisStatus ris_table_csv(const struct RisResultTable *table, char **out);

/**
 * # Safety
 * `table` must come from this library and not be used afterwards.
 */
void ris_table_free(struct RisResultTable *table);

/**
 * # Safety
 * `s` must come from [`ris_table_csv`] and not be used afterwards.
 */
void ris_string_free(char *s);

/**
 * Linear path-loss gain `c0 (d/d0)^-gamma`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RisStatus ris_path_loss(double c0_db, double d0, double gamma, double d, double *out);

/**
 * Nearest codeword of the `bits`-bit phase codebook.
 *
 * # Safety
 * `out` must be writable.
 */
enum RisStatus ris_quantize_phase(uint8_t bits, double theta, double *out);

/**
 * Reflection amplitude of the practical model at phase `theta`.
 */
double ris_amplitude(double beta_min, double phi, double alpha, double theta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_SECRECY_H */
