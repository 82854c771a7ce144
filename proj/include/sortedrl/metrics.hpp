// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sortedrl/engine.hpp"
#include "sortedrl/learner.hpp"
#include "sortedrl/workload.hpp"

namespace sortedrl {

/// Idle slot-time over total slot-time: sum((Q - r_k) * dt_k) / (T * Q).
double bubble_ratio(const StepTrace& trace, int64_t capacity);

/// Tokens per time unit over the trace's total duration.
double throughput(const StepTrace& trace, int64_t total_tokens);

/// Two-sample Kolmogorov-Smirnov distance (max |F_a - F_b|).
double ks_statistic(std::span<const int64_t> a, std::span<const int64_t> b);

/// Asymptotic two-sample KS critical value c(alpha) * sqrt((n + m) / (n m)).
double ks_critical_value(size_t n, size_t m, double alpha = 0.05);

struct SkewResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  size_t samples = 0;
  size_t reference_samples = 0;

  bool biased() const { return statistic > critical_value; }
};

/// KS distance between harvested lengths and a fresh reference sample drawn
/// from `reference`. Requires at least 100 harvested samples.
SkewResult length_skew(std::span<const int64_t> harvested, const LengthModel& reference,
                       uint64_t seed = 0x5eed, size_t reference_size = 20000);

struct UpdateRecord {
  int64_t step = 0;               // 1-based update counter
  PolicyVersion version = 0;      // clock value the batch was trained against
  int64_t group_epoch = 0;
  int64_t index_in_group = 0;     // 0-based position of this batch within its group
  int64_t batch_size = 0;
  double mean_length = 0.0;
  double reward_mean = 0.0;
  StalenessStats staleness;
  double objective = 0.0;
  double clock = 0.0;
};

struct IterationRecord {
  int64_t iteration = 0;
  int64_t group_epoch = 0;
  int64_t harvested = 0;
  int64_t scavenged = 0;
  int64_t steps = 0;
  double clock = 0.0;
  bool early_terminated = false;
};

struct RunReport {
  std::string mode;
  int64_t capacity = 0;
  StepCost step_cost;
  uint64_t seed = 0;

  StepTrace trace;  // rollout phase only
  double bubble_ratio = 0.0;
  double throughput = 0.0;  // engine-emitted tokens / T
  double goodput = 0.0;     // tokens delivered to the trainer / T
  double total_time = 0.0;
  double update_time = 0.0;
  double end_to_end_bubble_ratio = 0.0;  // counts update time as fully idle

  int64_t emitted_tokens = 0;
  int64_t harvested_tokens = 0;  // completed trajectories, delivered or not
  int64_t delivered_tokens = 0;
  int64_t buffered_tokens = 0;   // held by incomplete entries at the end
  int64_t discarded_tokens = 0;  // thrown away by on-policy scavenging

  int64_t delivered_trajectories = 0;
  int64_t dropped_trajectories = 0;     // completed but never filled a batch
  int64_t unconsumed_trajectories = 0;  // still incomplete when the run ended
  int64_t groups_loaded = 0;
  bool partial_final_group = false;

  std::vector<UpdateRecord> updates;
  std::vector<IterationRecord> iterations;
  std::vector<int64_t> delivered_lengths;  // in delivery order
};

struct CurriculumPoint {
  int64_t group_epoch = 0;
  int64_t step_index = 0;
  double mean_length = 0.0;
};

struct GroupCurriculum {
  int64_t group_epoch = 0;
  int64_t steps = 0;
  double first_mean = 0.0;
  double last_mean = 0.0;
  double ratio = 1.0;              // last / first
  double monotone_fraction = 1.0;  // share of adjacent steps that do not decrease
};

struct CurriculumProfile {
  std::vector<CurriculumPoint> points;
  std::vector<GroupCurriculum> groups;
  double mean_ratio = 1.0;  // averaged over groups
};

CurriculumProfile curriculum_profile(const RunReport& report);

}  // namespace sortedrl
