#ifndef RESDAC_H
#define RESDAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ResdacStatus {
  RESDAC_STATUS_OK = 0,
  RESDAC_STATUS_NULL_POINTER = 1,
  RESDAC_STATUS_INVALID_UTF8 = 2,
  RESDAC_STATUS_IO = 3,
  RESDAC_STATUS_PARSE = 4,
  RESDAC_STATUS_INVALID_CONFIG = 5,
  RESDAC_STATUS_SIMULATION = 6,
  RESDAC_STATUS_ANALYSIS = 7,
  RESDAC_STATUS_OUT_OF_RANGE = 8,
  RESDAC_STATUS_PANIC = 9,
} ResdacStatus;

// Opaque run configuration.
typedef struct ResdacConfig ResdacConfig;

// Opaque simulation result together with the configuration that produced it.
typedef struct ResdacTrace ResdacTrace;

// Bound evaluation of a trace.
typedef struct ResdacBounds {
  uintptr_t n;
  uint64_t horizon;
  double theta;
  double alpha;
  double eta;
  double epsilon;
  double omega_infinity;
  double e1;
  double y1;
  bool degenerate;
  uint64_t steady_state_start;
  double max_steady_tracking_error;
  uintptr_t envelope_violations;
  double max_offset_drift;
} ResdacBounds;

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library from the same thread.
const char *resdac_last_error_message(void);

// Loads a TOML configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum ResdacStatus resdac_config_load(const char *path, struct ResdacConfig **out);

// Parses configuration text. Relative `tabulated_file` paths resolve
// against `base_dir`, or the working directory when it is NULL.
//
// # Safety
// `text` and a non-NULL `base_dir` must be NUL-terminated strings; `out`
// must be writable.
enum ResdacStatus resdac_config_from_str(const char *text,
                                         const char *base_dir,
                                         struct ResdacConfig **out);

// Loads a bundled scenario (`scenario1`, `scenario2`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum ResdacStatus resdac_config_preset(const char *name, struct ResdacConfig **out);

// # Safety
// `config` must be a live handle.
enum ResdacStatus resdac_config_set_horizon(struct ResdacConfig *config, uint64_t horizon);

// Replaces the run seed; noise seeds that were derived from it follow.
//
// # Safety
// `config` must be a live handle.
enum ResdacStatus resdac_config_set_seed(struct ResdacConfig *config, uint64_t seed);

// # Safety
// `config` must be NULL or a handle not yet freed.
void resdac_config_free(struct ResdacConfig *config);

// Runs the protocol. The configuration handle stays owned by the caller.
//
// # Safety
// `config` must be a live handle and `out` writable.
enum ResdacStatus resdac_run(const struct ResdacConfig *config, struct ResdacTrace **out);

// # Safety
// `trace` must be a live handle and `out` writable.
enum ResdacStatus resdac_trace_horizon(const struct ResdacTrace *trace, uint64_t *out);

// Number of good (trusted plus ordinary) agents.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum ResdacStatus resdac_trace_good_count(const struct ResdacTrace *trace, uintptr_t *out);

// State `x_agent(t)` for `1 <= t <= horizon` and a one-based good agent id.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum ResdacStatus resdac_trace_state(const struct ResdacTrace *trace,
                                     uint64_t t,
                                     uintptr_t agent,
                                     double *out);

// Trusted reference average at `0 <= t <= horizon`.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum ResdacStatus resdac_trace_rbar_trusted(const struct ResdacTrace *trace,
                                            uint64_t t,
                                            double *out);

// # Safety
// `trace` must be a live handle and `out` writable.
enum ResdacStatus resdac_trace_bounds(const struct ResdacTrace *trace, struct ResdacBounds *out);

// Reconstructs every round's transition matrix and stores the number of
// rounds that fail any check in `failed_rounds`.
//
// # Safety
// `trace` must be a live handle and `failed_rounds` writable.
enum ResdacStatus resdac_trace_check_transitions(const struct ResdacTrace *trace,
                                                 uintptr_t *failed_rounds);

// Writes the CSV, bound and optional matrix/plot files into `dir`.
//
// # Safety
// `trace` must be a live handle and `dir` a NUL-terminated string.
enum ResdacStatus resdac_trace_write(const struct ResdacTrace *trace,
                                     const char *dir,
                                     bool emit_matrices,
                                     bool emit_plots);

// # Safety
// `trace` must be NULL or a handle not yet freed.
void resdac_trace_free(struct ResdacTrace *trace);

// Asymptotic tracking bound for `n` good agents.
//
// # Safety
// `out` must be writable.
enum ResdacStatus resdac_epsilon_bound(uintptr_t n,
                                       double theta,
                                       double alpha,
                                       double xbar_trusted_1,
                                       double rbar_trusted_0,
                                       double *out);

#endif  /* RESDAC_H */
