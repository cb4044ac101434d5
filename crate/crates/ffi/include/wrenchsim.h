#ifndef WRENCHSIM_H
#define WRENCHSIM_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
enum WsStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_ARGUMENT = 1,
  WS_STATUS_INVALID_UTF8 = 2,
  WS_STATUS_PARSE_ERROR = 3,
  WS_STATUS_INVALID_SCENARIO = 4,
  WS_STATUS_TASK_ABORTED = 5,
  WS_STATUS_NUMERICAL_DIVERGENCE = 6,
  WS_STATUS_IO_ERROR = 7,
};
#ifndef __cplusplus
typedef int32_t WsStatus;
#endif // __cplusplus

// Opaque result handle for one completed run.
typedef struct WsReport WsReport;

// Opaque scenario handle.
typedef struct WsScenario WsScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL if none.
//
// The pointer stays valid until the next failing call on the same thread;
// do not free it.
const char *ws_last_error_message(void);

// Parse a TOML scenario document into a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer; on
// `WS_STATUS_OK` the caller owns `*out` and must release it with
// `ws_scenario_free`.
WsStatus ws_scenario_from_toml(const char *text, struct WsScenario **out);

// Read and parse a TOML scenario file into a new handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer; on
// `WS_STATUS_OK` the caller owns `*out` and must release it with
// `ws_scenario_free`.
WsStatus ws_scenario_load(const char *path, struct WsScenario **out);

// Replace the scenario's RNG seed.
//
// # Safety
// `scenario` must be a live handle from `ws_scenario_from_toml` or
// `ws_scenario_load`.
WsStatus ws_scenario_set_seed(struct WsScenario *scenario, uint64_t seed);

// Replace the scenario's timestep in seconds; must be positive.
//
// # Safety
// `scenario` must be a live handle from `ws_scenario_from_toml` or
// `ws_scenario_load`.
WsStatus ws_scenario_set_dt(struct WsScenario *scenario, double dt);

// Release a scenario handle; NULL is a no-op.
//
// # Safety
// `scenario` must be NULL or a live handle that is not used afterwards.
void ws_scenario_free(struct WsScenario *scenario);

// Run the scenario to completion and hand back a report.
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer; on `WS_STATUS_OK`
// the caller owns `*out` and must release it with `ws_report_free`.
WsStatus ws_run(const struct WsScenario *scenario, struct WsReport **out);

// Final mass estimate, kg.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
WsStatus ws_report_mass_estimate(const struct WsReport *report, double *out);

// Filtered CoM-offset estimate, meters, written as x,y,z.
//
// # Safety
// `report` must be a live handle and `out` must point to at least three
// f64 slots.
WsStatus ws_report_offset_estimate(const struct WsReport *report, double *out);

// Distance between commanded and achieved TCP at release, meters.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
WsStatus ws_report_execution_error(const struct WsReport *report, double *out);

// Whether the placed object rests inside the support region.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
WsStatus ws_report_stable(const struct WsReport *report, bool *out);

// Full metrics document as a JSON string; distances in mm.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer; on `WS_STATUS_OK`
// the caller owns `*out` and must release it with `ws_string_free`.
WsStatus ws_report_metrics_json(const struct WsReport *report, char **out);

// Release a string returned by this library; NULL is a no-op.
//
// # Safety
// `s` must be NULL or a pointer obtained from `ws_report_metrics_json`
// that is not used afterwards.
void ws_string_free(char *s);

// Release a report handle; NULL is a no-op.
//
// # Safety
// `report` must be NULL or a live handle that is not used afterwards.
void ws_report_free(struct WsReport *report);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WRENCHSIM_H */
