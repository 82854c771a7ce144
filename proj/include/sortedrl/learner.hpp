// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "sortedrl/buffer.hpp"
#include "sortedrl/engine.hpp"

namespace sortedrl {

/// Clipped-objective and advantage hyperparameters. The clip range is
/// asymmetric (clip-higher): ratios are clipped to [1 - eps_low, 1 + eps_high].
struct Hyperparams {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double gamma = 1.0;
  double lambda = 1.0;

  void validate() const;
};

enum class AdvantageKind { reinforce_pp, gae };

std::string_view to_string(AdvantageKind kind);

struct TokenRecord {
  double logprob = 0.0;
  PolicyVersion version = 0;
};

/// Concatenates an entry's segments into one per-token behavior record.
/// The stored values are returned bit-for-bit; no recomputation happens.
std::vector<TokenRecord> assemble_behavior_logprobs(const BufferEntry& entry);

/// (R_i - mean) / std with the population standard deviation; a batch with
/// zero spread yields all-zero advantages. Needs at least two rewards.
std::vector<double> reinforce_pp_advantage(std::span<const double> rewards);

/// Generalized advantage estimation by backward recursion.
/// `values` carries one bootstrap entry more than `rewards`.
std::vector<double> gae_advantage(std::span<const double> rewards,
                                  std::span<const double> values, double gamma,
                                  double lambda);

struct ObjectiveResult {
  double objective = 0.0;
  std::vector<double> ratios;
};

/// Token-mean of min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)
/// where ratio = exp(new - behavior).
ObjectiveResult ppo_objective(std::span<const double> new_logprobs,
                              std::span<const double> behavior_logprobs,
                              std::span<const double> advantages, const Hyperparams& hp);

/// Binary outcome reward, deterministic in the request id. Success becomes
/// less likely as the trajectory approaches the length cap.
double synth_reward(RequestId request, int64_t length, int64_t cap);

class PolicyClock {
 public:
  PolicyVersion version() const { return version_; }
  PolicyVersion advance() { return ++version_; }

 private:
  PolicyVersion version_ = 0;
};

struct Trajectory {
  int64_t prompt_id = 0;
  int sample_index = 0;
  RequestId request_id = 0;
  int64_t group_epoch = 0;
  int64_t length = 0;
  PolicyVersion harvest_version = 0;
  double reward = 0.0;
  std::vector<TokenRecord> behavior;
  std::vector<double> advantages;  // per token, filled by compute_advantages
};

struct TrainBatch {
  std::vector<Trajectory> trajectories;
  double reward_mean = 0.0;
  double reward_std = 0.0;

  double mean_length() const;
  int64_t token_count() const;
};

/// Fills per-token advantages. Reinforce++ broadcasts the normalized
/// trajectory advantage to every token; GAE uses a terminal reward and a
/// zero value baseline (there is no critic in the simulator).
void compute_advantages(TrainBatch& batch, AdvantageKind kind, const Hyperparams& hp);

/// Evaluates the clipped objective with new logprobs synthesized under
/// `current`, so every ratio differs from 1 exactly when a token is stale.
ObjectiveResult evaluate_objective(const TrainBatch& batch, PolicyVersion current,
                                   const Hyperparams& hp);

struct StalenessStats {
  std::map<int64_t, int64_t> histogram;  // staleness -> token count
  int64_t tokens = 0;
  int64_t max = 0;
  int64_t p50 = 0;
};

StalenessStats staleness_of(const TrainBatch& batch, PolicyVersion version_at_update);

struct UpdateResult {
  PolicyVersion version_at_update = 0;
  PolicyVersion new_version = 0;
  StalenessStats staleness;
};

/// Records staleness against the clock's current version, then advances it.
UpdateResult apply_update(PolicyClock& clock, const TrainBatch& batch);

}  // namespace sortedrl
