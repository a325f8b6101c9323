/*
 * unipo C API.
 *
 * All handles are opaque. Functions return a unipo_status; on failure the
 * calling thread's last error (message, document path, byte offset) is
 * available through unipo_last_error_*. Strings returned through `char**`
 * out-parameters are NUL-terminated canonical JSON owned by the caller and
 * must be released with unipo_string_free.
 *
 * Handles are safe for concurrent use: registries and services allow
 * concurrent readers, and runs are immutable after creation.
 */
#ifndef UNIPO_UNIPO_H
#define UNIPO_UNIPO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(UNIPO_BUILDING_LIBRARY)
#    define UNIPO_API __declspec(dllexport)
#  else
#    define UNIPO_API __declspec(dllimport)
#  endif
#else
#  define UNIPO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum unipo_status {
  UNIPO_OK = 0,
  UNIPO_ERR_INVALID_ARGUMENT = 1,
  UNIPO_ERR_SYNTAX = 2,
  UNIPO_ERR_SCHEMA = 3,
  UNIPO_ERR_VALIDATION = 4,
  UNIPO_ERR_NOT_FOUND = 5,
  UNIPO_ERR_NON_FINITE_INPUT = 6,
  UNIPO_ERR_EMPTY_GROUP = 7,
  UNIPO_ERR_EMPTY_RESPONSE = 8,
  UNIPO_ERR_MISSING_REFERENCE_LOGPROB = 9,
  UNIPO_ERR_MISSING_PRECOMPUTED_ADVANTAGE = 10,
  UNIPO_ERR_UNKNOWN_COMPONENT_KIND = 11,
  UNIPO_ERR_LENGTH_EXCEEDS_LMAX = 12,
  UNIPO_ERR_THRESHOLD_TOO_SMALL = 13,
  UNIPO_ERR_UNKNOWN_METRIC = 14,
  UNIPO_ERR_UNKNOWN_BINDING = 15,
  UNIPO_ERR_DUPLICATE_ALGORITHM = 16,
  UNIPO_ERR_INVALID_CONFIG = 17,
  UNIPO_ERR_IO = 18,
  UNIPO_ERR_INTERNAL = 99
} unipo_status;

typedef struct unipo_registry unipo_registry;
typedef struct unipo_run unipo_run;
typedef struct unipo_service unipo_service;

UNIPO_API const char* unipo_version(void);
UNIPO_API const char* unipo_status_name(unipo_status status);

/* Last error of the calling thread. Valid until the next failing call. */
UNIPO_API const char* unipo_last_error_message(void);
UNIPO_API const char* unipo_last_error_path(void);
/* Byte offset of the last syntax error, or -1. */
UNIPO_API int64_t unipo_last_error_offset(void);

UNIPO_API void unipo_string_free(char* s);

/* ---- algorithm registry ------------------------------------------------ */

/* Registry pre-populated with reinforce, ppo, grpo, dapo and dr_grpo. */
UNIPO_API unipo_status unipo_registry_new(unipo_registry** out);
UNIPO_API void unipo_registry_free(unipo_registry* reg);
/* Registers a definition document; optionally returns its algorithm_id. */
UNIPO_API unipo_status unipo_registry_register(unipo_registry* reg, const char* data, size_t len, char** out_id);
/* JSON array of every registered definition. */
UNIPO_API unipo_status unipo_registry_list(const unipo_registry* reg, char** out_json);
UNIPO_API unipo_status unipo_registry_get(const unipo_registry* reg, const char* algorithm_id, char** out_json);
/* Component-level diff of two registered definitions. */
UNIPO_API unipo_status unipo_diff(const unipo_registry* reg, const char* a, const char* b, char** out_json);

/* ---- runs ---------------------------------------------------------------- */

UNIPO_API unipo_status unipo_run_parse(const char* data, size_t len, unipo_run** out);
UNIPO_API void unipo_run_free(unipo_run* run);
UNIPO_API unipo_status unipo_run_serialize(const unipo_run* run, char** out_text);
UNIPO_API unipo_status unipo_run_summary(const unipo_run* run, char** out_json);
/* Writes the report to out_json; returns UNIPO_OK even when the report has
 * violations. `*out_valid` is 1 iff the report is empty. */
UNIPO_API unipo_status unipo_run_validate(const unipo_run* run, const unipo_registry* reg, int* out_valid,
                                          char** out_json);

/* Step objective of the step whose index field equals `step_index`. When
 * `algorithm_id` is NULL the run's own algorithm is used. */
UNIPO_API unipo_status unipo_compute_step(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                          int64_t step_index, char** out_json);
/* Full step payload, as served by GET /api/runs/{id}/steps/{n}. */
UNIPO_API unipo_status unipo_step_payload(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                          int64_t step_index, char** out_json);
/* One token's breakdown, as served by GET .../tokens/{g}/{r}/{t}. */
UNIPO_API unipo_status unipo_token_payload(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                           int64_t step_index, size_t group, size_t response, size_t token,
                                           char** out_json);
/* Metric series downsampled to `threshold` points (0 = no downsampling). */
UNIPO_API unipo_status unipo_metric_series(const unipo_run* run, const unipo_registry* reg, const char* metric,
                                           size_t threshold, char** out_json);

/* ---- synthetic runs ------------------------------------------------------ */

typedef enum unipo_reward_scheme { UNIPO_REWARD_BINARY = 0, UNIPO_REWARD_CONTINUOUS = 1 } unipo_reward_scheme;

typedef struct unipo_synth_config {
  uint64_t seed;
  int64_t n_steps;
  int64_t groups_per_step;
  int64_t group_size;
  int64_t len_min;
  int64_t len_max;
  unipo_reward_scheme reward_scheme;
  double p_correct_start;
  double p_correct_end;
  double reward_low;
  double reward_high;
  double drift;
  const char* algorithm_id;
} unipo_synth_config;

UNIPO_API void unipo_synth_config_init(unipo_synth_config* cfg);
UNIPO_API unipo_status unipo_synth(const unipo_registry* reg, const unipo_synth_config* cfg, unipo_run** out);

/* ---- service ------------------------------------------------------------- */

/* The service shares `reg`; the registry must outlive it. */
UNIPO_API unipo_status unipo_service_new(unipo_registry* reg, unipo_service** out);
UNIPO_API void unipo_service_free(unipo_service* svc);
/* Loads every *.json run in `dir`; the JSON summary lists loaded and skipped files. */
UNIPO_API unipo_status unipo_service_load_dir(unipo_service* svc, const char* dir, char** out_json);
UNIPO_API unipo_status unipo_service_add_run(unipo_service* svc, const unipo_run* run);
UNIPO_API unipo_status unipo_service_precompute(unipo_service* svc);
/* Routes one HTTP request. `target` is the path plus optional query string.
 * Always produces a status and a JSON body when it returns UNIPO_OK. */
UNIPO_API unipo_status unipo_service_request(unipo_service* svc, const char* method, const char* target,
                                             const char* body, size_t body_len, int* out_http_status,
                                             char** out_json);
/* Writes the static API bundle; returns the number of files written. */
UNIPO_API unipo_status unipo_service_export(unipo_service* svc, const char* out_dir, size_t threshold,
                                            int include_tokens, size_t* out_files);

#ifdef __cplusplus
}
#endif

#endif /* UNIPO_UNIPO_H */
