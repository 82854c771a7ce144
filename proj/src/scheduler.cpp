// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sortedrl/error.hpp"

namespace sortedrl {

std::string_view to_string(SchedulerMode mode) {
  switch (mode) {
    case SchedulerMode::baseline_sync: return "baseline_sync";
    case SchedulerMode::sorted_on_policy: return "sorted_on_policy";
    case SchedulerMode::sorted_partial: return "sorted_partial";
    case SchedulerMode::no_grouping: return "no_grouping";
    case SchedulerMode::post_hoc_sort: return "post_hoc_sort";
  }
  return "unknown";
}

std::optional<SchedulerMode> parse_mode(std::string_view text) {
  for (auto m : {SchedulerMode::baseline_sync, SchedulerMode::sorted_on_policy,
                 SchedulerMode::sorted_partial, SchedulerMode::no_grouping,
                 SchedulerMode::post_hoc_sort})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

bool is_synchronous(SchedulerMode mode) {
  return mode == SchedulerMode::baseline_sync || mode == SchedulerMode::post_hoc_sort;
}

bool is_grouped(SchedulerMode mode) {
  return mode == SchedulerMode::sorted_on_policy || mode == SchedulerMode::sorted_partial;
}

RolloutMode rollout_mode_of(SchedulerMode mode) {
  return mode == SchedulerMode::sorted_partial ? RolloutMode::partial
                                               : RolloutMode::fully_on_policy;
}

int64_t SchedulerConfig::group_prompts() const {
  return is_synchronous(mode) ? rollout_batch : rollout_batch * group_size;
}

int64_t SchedulerConfig::effective_ready_target() const {
  return early_term.ready_target > 0 ? early_term.ready_target : update_batch_size;
}

void SchedulerConfig::validate() const {
  if (rollout_batch < 1) fail(ErrorCode::invalid_argument, "scheduler.rollout_batch: must be >= 1");
  if (group_size < 1) fail(ErrorCode::invalid_argument, "scheduler.group_size: must be >= 1");
  if (samples_per_prompt < 1)
    fail(ErrorCode::invalid_argument, "workload.samples_per_prompt: must be >= 1");
  if (update_batch_size < 1)
    fail(ErrorCode::invalid_argument, "scheduler.update_batch: must be >= 1");
  if (early_term.ready_target < 0)
    fail(ErrorCode::invalid_argument, "scheduler.ready_target: must be >= 0");
  if (!(early_term.min_util >= 0.0 && early_term.min_util <= 1.0))
    fail(ErrorCode::invalid_argument, "scheduler.min_util: must lie in [0, 1]");
  if (max_updates < 0) fail(ErrorCode::invalid_argument, "scheduler.max_updates: must be >= 0");

  const int64_t pool = group_trajectories();
  if (update_batch_size > pool)
    fail(ErrorCode::invalid_argument,
         "scheduler.update_batch: must be <= " + std::to_string(pool) +
             " trajectories per " + (is_synchronous(mode) ? "rollout batch" : "group"));
  if (effective_ready_target() < update_batch_size)
    fail(ErrorCode::invalid_argument,
         "scheduler.ready_target: must be >= scheduler.update_batch (harvest whole batches)");
  if (mode != SchedulerMode::no_grouping && pool % update_batch_size != 0)
    fail(ErrorCode::invalid_argument,
         "scheduler.update_batch: must divide the " + std::to_string(pool) +
             " trajectories of each " + (is_synchronous(mode) ? "rollout batch" : "group"));
}

bool check_early_termination(const TerminationProbe& probe) {
  if (probe.completed_this_iteration >= probe.ready_target) return true;
  if (!probe.refill_available || probe.queued > 0 || probe.capacity <= 0) return false;
  const double util =
      static_cast<double>(probe.running) / static_cast<double>(probe.capacity);
  return util < probe.min_util;
}

namespace {

BatchPlan slice(std::vector<ReadyTrajectory>& ready, int64_t update_batch_size) {
  BatchPlan plan;
  if (update_batch_size < 1)
    fail(ErrorCode::invalid_argument, "update batch size must be >= 1");
  const auto size = static_cast<size_t>(update_batch_size);
  size_t used = 0;
  while (ready.size() - used >= size) {
    plan.emplace_back(ready.begin() + static_cast<std::ptrdiff_t>(used),
                      ready.begin() + static_cast<std::ptrdiff_t>(used + size));
    used += size;
  }
  ready.erase(ready.begin(), ready.begin() + static_cast<std::ptrdiff_t>(used));
  return plan;
}

}  // namespace

BatchPlan select_train_batches(std::vector<ReadyTrajectory>& ready, int64_t update_batch_size) {
  std::sort(ready.begin(), ready.end(), [](const ReadyTrajectory& a, const ReadyTrajectory& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.key < b.key;
  });
  return slice(ready, update_batch_size);
}

BatchPlan slice_in_arrival_order(std::vector<ReadyTrajectory>& ready, int64_t update_batch_size) {
  std::sort(ready.begin(), ready.end(),
            [](const ReadyTrajectory& a, const ReadyTrajectory& b) { return a.key < b.key; });
  return slice(ready, update_batch_size);
}

}  // namespace sortedrl
