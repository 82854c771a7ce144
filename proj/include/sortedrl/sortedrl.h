/* SPDX-License-Identifier: Apache-2.0 */
/* C interface to the SortedRL rollout-scheduling simulator.
 *
 * All functions return an srl_status; on failure a thread-local message is
 * available from srl_last_error() until the next call on the same thread.
 * Handles are opaque and owned by the caller; strings handed out by the
 * library must be released with srl_string_free(). */
#ifndef SORTEDRL_H
#define SORTEDRL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef SORTEDRL_BUILDING
#    define SRL_API __declspec(dllexport)
#  else
#    define SRL_API __declspec(dllimport)
#  endif
#else
#  define SRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srl_status {
  SRL_OK = 0,
  SRL_INVALID_ARGUMENT = 1,
  SRL_DUPLICATE_REQUEST = 2,
  SRL_UNKNOWN_REQUEST = 3,
  SRL_INVALID_STATE = 4,
  SRL_PARSE_ERROR = 5,
  SRL_IO_ERROR = 6,
  SRL_INTERNAL_ERROR = 99
} srl_status;

typedef struct srl_config srl_config;
typedef struct srl_run srl_run;

typedef struct srl_summary {
  double bubble_ratio;
  double end_to_end_bubble_ratio;
  double throughput; /* engine-emitted tokens per time unit */
  double goodput;    /* tokens delivered to the trainer per time unit */
  double total_time;
  int64_t emitted_tokens;
  int64_t harvested_tokens;
  int64_t delivered_tokens;
  int64_t buffered_tokens;
  int64_t discarded_tokens;
  int64_t updates;
  int64_t iterations;
  int64_t steps;
  int64_t max_staleness;
  int64_t delivered_trajectories;
  int64_t dropped_trajectories;
  int64_t unconsumed_trajectories;
  int64_t groups_loaded;
  int partial_final_group;
  double curriculum_ratio;
  double skew_statistic; /* NaN when fewer than 100 trajectories were delivered */
  double skew_critical;
} srl_summary;

SRL_API const char* srl_version(void);
SRL_API const char* srl_last_error(void);
SRL_API const char* srl_status_name(srl_status status);

/* Configuration. */
SRL_API srl_status srl_config_new(srl_config** out);
SRL_API srl_status srl_config_load(const char* path, srl_config** out);
SRL_API srl_status srl_config_parse(const char* text, srl_config** out);
SRL_API srl_status srl_config_set(srl_config* config, const char* key, const char* value);
SRL_API srl_status srl_config_validate(const srl_config* config);
/* Applies SORTEDRL_OUTPUT_DIR when set. */
SRL_API srl_status srl_config_apply_environment(srl_config* config);
SRL_API srl_status srl_config_to_text(const srl_config* config, char** out);
SRL_API void srl_config_free(srl_config* config);

/* Runs. srl_run_execute keeps everything in memory; srl_run_write also
 * writes the artifacts into the configured output directory. `out` may be
 * NULL for srl_run_write when only the files are wanted. */
SRL_API srl_status srl_run_execute(const srl_config* config, srl_run** out);
SRL_API srl_status srl_run_write(const srl_config* config, srl_run** out);
SRL_API srl_status srl_run_summary(const srl_run* run, srl_summary* out);
/* Copies up to `capacity` delivered trajectory lengths; `count` receives
 * the total available. */
SRL_API srl_status srl_run_delivered_lengths(const srl_run* run, int64_t* lengths,
                                             size_t capacity, size_t* count);
SRL_API void srl_run_free(srl_run* run);

/* Sweeps one axis; writes per-point directories plus sweep.csv under the
 * configured output directory. */
SRL_API srl_status srl_sweep(const srl_config* config, const char* axis,
                             const char* const* values, size_t value_count, int parallelism);

/* Renders tables from one or more run or sweep directories. */
SRL_API srl_status srl_report(const char* const* dirs, size_t dir_count, char** out);

SRL_API void srl_string_free(char* text);

/* Math kernels. */
SRL_API srl_status srl_bubble_ratio(const double* durations, const int64_t* active, size_t steps,
                                    int64_t capacity, double* out);
SRL_API srl_status srl_reinforce_pp(const double* rewards, size_t n, double* advantages);
/* `values` holds n + 1 entries (the last is the bootstrap value). */
SRL_API srl_status srl_gae(const double* rewards, const double* values, size_t n, double gamma,
                           double lambda, double* advantages);
SRL_API srl_status srl_ppo_objective(const double* new_logprobs, const double* behavior_logprobs,
                                     const double* advantages, size_t n, double eps_low,
                                     double eps_high, double* objective);
SRL_API double srl_synth_logprob(int64_t request_id, int64_t token_index, int64_t policy_version);

#ifdef __cplusplus
}
#endif

#endif /* SORTEDRL_H */
