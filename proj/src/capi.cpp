// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/sortedrl.h"

#include <cmath>
#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "sortedrl/config.hpp"
#include "sortedrl/error.hpp"
#include "sortedrl/learner.hpp"
#include "sortedrl/metrics.hpp"
#include "sortedrl/runner.hpp"

struct srl_config {
  sortedrl::SimConfig value;
};

struct srl_run {
  sortedrl::SimConfig config;
  sortedrl::RunReport report;
};

namespace {

thread_local std::string g_last_error;

srl_status status_of(sortedrl::ErrorCode code) {
  switch (code) {
    case sortedrl::ErrorCode::invalid_argument: return SRL_INVALID_ARGUMENT;
    case sortedrl::ErrorCode::duplicate_request: return SRL_DUPLICATE_REQUEST;
    case sortedrl::ErrorCode::unknown_request: return SRL_UNKNOWN_REQUEST;
    case sortedrl::ErrorCode::invalid_state: return SRL_INVALID_STATE;
    case sortedrl::ErrorCode::parse: return SRL_PARSE_ERROR;
    case sortedrl::ErrorCode::io: return SRL_IO_ERROR;
  }
  return SRL_INTERNAL_ERROR;
}

template <typename Fn>
srl_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SRL_OK;
  } catch (const sortedrl::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return SRL_INTERNAL_ERROR;
}

void require(bool ok, const char* what) {
  if (!ok) sortedrl::fail(sortedrl::ErrorCode::invalid_argument, what);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* srl_version(void) { return "0.1.0"; }

const char* srl_last_error(void) { return g_last_error.c_str(); }

const char* srl_status_name(srl_status status) {
  switch (status) {
    case SRL_OK: return "ok";
    case SRL_INVALID_ARGUMENT: return "invalid_argument";
    case SRL_DUPLICATE_REQUEST: return "duplicate_request";
    case SRL_UNKNOWN_REQUEST: return "unknown_request";
    case SRL_INVALID_STATE: return "invalid_state";
    case SRL_PARSE_ERROR: return "parse_error";
    case SRL_IO_ERROR: return "io_error";
    case SRL_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

srl_status srl_config_new(srl_config** out) {
  return guarded([&] {
    require(out, "out must not be null");
    *out = new srl_config{};
  });
}

srl_status srl_config_load(const char* path, srl_config** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new srl_config{sortedrl::load_config(path)};
  });
}

srl_status srl_config_parse(const char* text, srl_config** out) {
  return guarded([&] {
    require(text && out, "text and out must not be null");
    *out = new srl_config{sortedrl::parse_config(text)};
  });
}

srl_status srl_config_set(srl_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value must not be null");
    sortedrl::set_config_value(config->value, key, value);
    config->value.scheduler.samples_per_prompt = config->value.workload.samples_per_prompt;
  });
}

srl_status srl_config_validate(const srl_config* config) {
  return guarded([&] {
    require(config, "config must not be null");
    config->value.validate();
  });
}

srl_status srl_config_apply_environment(srl_config* config) {
  return guarded([&] {
    require(config, "config must not be null");
    sortedrl::apply_environment(config->value);
  });
}

srl_status srl_config_to_text(const srl_config* config, char** out) {
  return guarded([&] {
    require(config && out, "config and out must not be null");
    *out = copy_string(sortedrl::to_text(config->value));
  });
}

void srl_config_free(srl_config* config) { delete config; }

srl_status srl_run_execute(const srl_config* config, srl_run** out) {
  return guarded([&] {
    require(config && out, "config and out must not be null");
    auto run = std::make_unique<srl_run>();
    run->config = config->value;
    run->report = sortedrl::run_in_memory(config->value);
    *out = run.release();
  });
}

srl_status srl_run_write(const srl_config* config, srl_run** out) {
  return guarded([&] {
    require(config, "config must not be null");
    auto run = std::make_unique<srl_run>();
    run->config = config->value;
    run->report = sortedrl::run_to_directory(config->value);
    if (out) *out = run.release();
  });
}

srl_status srl_run_summary(const srl_run* run, srl_summary* out) {
  return guarded([&] {
    require(run && out, "run and out must not be null");
    const auto& r = run->report;
    const auto d = sortedrl::digest(r, run->config);
    *out = srl_summary{};
    out->bubble_ratio = r.bubble_ratio;
    out->end_to_end_bubble_ratio = r.end_to_end_bubble_ratio;
    out->throughput = r.throughput;
    out->goodput = r.goodput;
    out->total_time = r.total_time;
    out->emitted_tokens = r.emitted_tokens;
    out->harvested_tokens = r.harvested_tokens;
    out->delivered_tokens = r.delivered_tokens;
    out->buffered_tokens = r.buffered_tokens;
    out->discarded_tokens = r.discarded_tokens;
    out->updates = static_cast<int64_t>(r.updates.size());
    out->iterations = static_cast<int64_t>(r.iterations.size());
    out->steps = static_cast<int64_t>(r.trace.records.size());
    out->max_staleness = d.max_staleness;
    out->delivered_trajectories = r.delivered_trajectories;
    out->dropped_trajectories = r.dropped_trajectories;
    out->unconsumed_trajectories = r.unconsumed_trajectories;
    out->groups_loaded = r.groups_loaded;
    out->partial_final_group = r.partial_final_group ? 1 : 0;
    out->curriculum_ratio = d.curriculum_ratio;
    out->skew_statistic = d.skew_statistic;
    out->skew_critical = d.skew_critical;
  });
}

srl_status srl_run_delivered_lengths(const srl_run* run, int64_t* lengths, size_t capacity,
                                     size_t* count) {
  return guarded([&] {
    require(run && count, "run and count must not be null");
    require(lengths || capacity == 0, "lengths must not be null when capacity > 0");
    const auto& v = run->report.delivered_lengths;
    *count = v.size();
    const size_t n = std::min(capacity, v.size());
    if (n) std::memcpy(lengths, v.data(), n * sizeof(int64_t));
  });
}

void srl_run_free(srl_run* run) { delete run; }

srl_status srl_sweep(const srl_config* config, const char* axis, const char* const* values,
                     size_t value_count, int parallelism) {
  return guarded([&] {
    require(config && axis, "config and axis must not be null");
    require(values || value_count == 0, "values must not be null");
    std::vector<std::string> v;
    for (size_t i = 0; i < value_count; ++i) {
      require(values[i], "sweep value must not be null");
      v.emplace_back(values[i]);
    }
    sortedrl::run_sweep(config->value, axis, v, parallelism);
  });
}

srl_status srl_report(const char* const* dirs, size_t dir_count, char** out) {
  return guarded([&] {
    require(dirs && out, "dirs and out must not be null");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < dir_count; ++i) {
      require(dirs[i], "directory must not be null");
      paths.emplace_back(dirs[i]);
    }
    *out = copy_string(sortedrl::render_report(paths));
  });
}

void srl_string_free(char* text) { delete[] text; }

srl_status srl_bubble_ratio(const double* durations, const int64_t* active, size_t steps,
                            int64_t capacity, double* out) {
  return guarded([&] {
    require(out && (steps == 0 || (durations && active)), "null pointer argument");
    sortedrl::StepTrace trace;
    for (size_t i = 0; i < steps; ++i) trace.append(durations[i], active[i]);
    *out = sortedrl::bubble_ratio(trace, capacity);
  });
}

srl_status srl_reinforce_pp(const double* rewards, size_t n, double* advantages) {
  return guarded([&] {
    require(advantages && (n == 0 || rewards), "null pointer argument");
    const auto a = sortedrl::reinforce_pp_advantage({rewards, n});
    std::copy(a.begin(), a.end(), advantages);
  });
}

srl_status srl_gae(const double* rewards, const double* values, size_t n, double gamma,
                   double lambda, double* advantages) {
  return guarded([&] {
    require(values && advantages && (n == 0 || rewards), "null pointer argument");
    const auto a = sortedrl::gae_advantage({rewards, n}, {values, n + 1}, gamma, lambda);
    std::copy(a.begin(), a.end(), advantages);
  });
}

srl_status srl_ppo_objective(const double* new_logprobs, const double* behavior_logprobs,
                             const double* advantages, size_t n, double eps_low, double eps_high,
                             double* objective) {
  return guarded([&] {
    require(objective && (n == 0 || (new_logprobs && behavior_logprobs && advantages)),
            "null pointer argument");
    sortedrl::Hyperparams hp;
    hp.eps_low = eps_low;
    hp.eps_high = eps_high;
    hp.validate();
    *objective = sortedrl::ppo_objective({new_logprobs, n}, {behavior_logprobs, n},
                                         {advantages, n}, hp)
                     .objective;
  });
}

double srl_synth_logprob(int64_t request_id, int64_t token_index, int64_t policy_version) {
  return sortedrl::synth_logprob(request_id, token_index, policy_version);
}

}  // extern "C"
