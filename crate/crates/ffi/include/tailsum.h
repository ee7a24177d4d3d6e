/* tailsum C API. See README.md for usage; memory returned through char** is freed with ts_string_free. */

#ifndef TAILSUM_H
#define TAILSUM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Estimation method selector.
 */
typedef enum TsMethod {
  TS_METHOD_FPTAS = 0,
  TS_METHOD_FPTAS_BIT = 1,
  TS_METHOD_EXACT = 2,
  TS_METHOD_MC = 3,
} TsMethod;

/**
 * Call outcome. Mirrors the CLI exit-code taxonomy, plus `NullArgument`
 * for contract violations at the boundary.
 */
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_INTERNAL_ERROR = 1,
  TS_STATUS_PARSE_ERROR = 2,
  TS_STATUS_PARAMETER_ERROR = 3,
  TS_STATUS_SIZE_GUARD_ERROR = 4,
  TS_STATUS_NULL_ARGUMENT = 5,
} TsStatus;

/**
 * Opaque parsed instance.
 */
typedef struct TsInstance TsInstance;

/**
 * Run options. Zero/null fields mean "use the default"; see the field docs.
 */
typedef struct TsOptions {
  enum TsMethod method;
  /**
   * Relative accuracy as a rational string ("1/10", "0.05"); null keeps
   * the default of 1/10.
   */
  const char *epsilon;
  /**
   * Threshold override; honored only when `has_threshold` is true,
   * otherwise the instance document's threshold applies.
   */
  int64_t threshold;
  bool has_threshold;
  /**
   * Monte-Carlo sample count (0 = 100000).
   */
  uint64_t mc_samples;
  /**
   * Monte-Carlo seed.
   */
  uint64_t seed;
  /**
   * Monte-Carlo Hoeffding failure probability (0 = 1e-3).
   */
  double mc_delta;
  /**
   * Bit-mode oracle precision override (0 = derived floor; values below
   * the floor are refused).
   */
  uint64_t bit_l;
  /**
   * DP worker threads (0 or 1 = sequential; results are identical).
   */
  uint32_t parallelism;
  /**
   * Exact-convolution size guard in cells (0 = 10^7).
   */
  uint64_t max_exact_cells;
  /**
   * Run the fptas method on best-effort float magnitudes (uncertified).
   */
  bool float_arithmetic;
} TsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *ts_last_error(void);

/**
 * Library version as a static string; do not free.
 */
const char *ts_version(void);

/**
 * Default-initialized options: certified fptas at epsilon = 1/10.
 */
struct TsOptions ts_options_default(void);

/**
 * Parses an instance document (the `tailsum/1` TOML format) into a handle.
 *
 * On success writes the handle through `out` and returns `Ok`;
 * on failure leaves `out` untouched.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_instance_parse(const char *text, struct TsInstance **out);

/**
 * Releases a handle from [`ts_instance_parse`]. Null is a no-op.
 *
 * # Safety
 * `inst` must be a pointer previously returned by [`ts_instance_parse`]
 * and not already freed.
 */
void ts_instance_free(struct TsInstance *inst);

/**
 * Runs an estimation method against a parsed instance.
 *
 * On success writes a NUL-terminated report document through `out_report`
 * (free it with [`ts_string_free`]) and returns `Ok`.
 *
 * # Safety
 * `inst` must be a live handle, `opts` and `out_report` valid pointers;
 * `opts.epsilon`, when non-null, must be NUL-terminated.
 */
enum TsStatus ts_run(const struct TsInstance *inst,
                     const struct TsOptions *opts,
                     char **out_report);

/**
 * Releases a string produced by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not already be freed.
 */
void ts_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TAILSUM_H */
