// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sortedrl/buffer.hpp"
#include "sortedrl/engine.hpp"

namespace sortedrl {

enum class SchedulerMode {
  baseline_sync,     // roll out b prompts, wait for all, update in arrival order
  sorted_on_policy,  // grouped + oversubscribed + early termination, discard partials
  sorted_partial,    // as above, partials resumed with their behavior logprobs
  no_grouping,       // ablation: oversubscription with continuous fresh loading
  post_hoc_sort,     // ablation: baseline rollout, batches sorted by length afterwards
};

std::string_view to_string(SchedulerMode mode);
std::optional<SchedulerMode> parse_mode(std::string_view text);

/// Modes that wait for every admitted request (no early termination).
bool is_synchronous(SchedulerMode mode);
/// Modes bound by the cache-aware group loading contract.
bool is_grouped(SchedulerMode mode);
RolloutMode rollout_mode_of(SchedulerMode mode);

struct EarlyTermination {
  int64_t ready_target = 0;  // 0 selects update_batch_size
  double min_util = 0.0;
};

struct SchedulerConfig {
  SchedulerMode mode = SchedulerMode::sorted_on_policy;
  int64_t rollout_batch = 128;  // b, prompts per rollout batch
  int64_t group_size = 4;       // n, rollout batches per group
  int samples_per_prompt = 1;   // G
  int64_t update_batch_size = 128;
  EarlyTermination early_term;
  int64_t max_updates = 0;  // 0 = run until the prompt stream is drained

  void validate() const;

  /// Prompts per load: n * b for grouped modes and the no-grouping pool,
  /// b for the synchronous modes.
  int64_t group_prompts() const;
  int64_t group_trajectories() const { return group_prompts() * samples_per_prompt; }
  int64_t effective_ready_target() const;
};

/// Inputs to the early-termination predicate, sampled between decode steps.
struct TerminationProbe {
  int64_t completed_this_iteration = 0;
  int64_t ready_target = 0;
  int64_t running = 0;
  int64_t capacity = 1;
  int64_t queued = 0;
  double min_util = 0.0;
  /// Whether terminating would let fresh work take the freed slots. The
  /// utilization floor is pointless (and livelocks on-policy rollouts) when
  /// the same stragglers would just be re-admitted.
  bool refill_available = true;
};

/// True iff enough trajectories are ready, or the engine has drained below
/// the utilization floor with nothing queued behind it.
bool check_early_termination(const TerminationProbe& probe);

struct ReadyTrajectory {
  EntryKey key;
  RequestId request_id = 0;
  int64_t length = 0;
  int64_t group_epoch = 0;
  PolicyVersion harvest_version = 0;
};

using BatchPlan = std::vector<std::vector<ReadyTrajectory>>;

/// Sorts `ready` ascending by (length, prompt_id, sample_index) and slices
/// off as many full batches as it holds, shortest first. The remainder
/// (fewer than one batch) is left in `ready`.
BatchPlan select_train_batches(std::vector<ReadyTrajectory>& ready, int64_t update_batch_size);

/// Same slicing, but in prompt arrival order (prompt_id, sample_index).
BatchPlan slice_in_arrival_order(std::vector<ReadyTrajectory>& ready, int64_t update_batch_size);

struct GroupState {
  int64_t loaded_prompts = 0;
  int64_t trajectories_outstanding = 0;
  int64_t group_epoch = -1;  // -1 until the first load
  bool partial = false;      // stream ran out mid-group
};

}  // namespace sortedrl
