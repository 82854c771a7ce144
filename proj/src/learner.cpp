// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sortedrl/error.hpp"

namespace sortedrl {

void Hyperparams::validate() const {
  if (!(eps_low > 0.0) || !std::isfinite(eps_low))
    fail(ErrorCode::invalid_argument, "learner.eps_low: must be positive");
  if (!(eps_high > 0.0) || !std::isfinite(eps_high))
    fail(ErrorCode::invalid_argument, "learner.eps_high: must be positive");
  if (eps_low >= 1.0) fail(ErrorCode::invalid_argument, "learner.eps_low: must be < 1");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    fail(ErrorCode::invalid_argument, "learner.gamma: must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    fail(ErrorCode::invalid_argument, "learner.lambda: must lie in [0, 1]");
}

std::string_view to_string(AdvantageKind kind) {
  return kind == AdvantageKind::gae ? "gae" : "reinforce_pp";
}

std::vector<TokenRecord> assemble_behavior_logprobs(const BufferEntry& entry) {
  if (!entry.completed)
    fail(ErrorCode::invalid_state, "behavior logprobs requested for an incomplete entry (prompt " +
                                       std::to_string(entry.prompt_id) + ")");
  std::vector<TokenRecord> out;
  out.reserve(static_cast<size_t>(entry.partial_tokens));
  for (const auto& seg : entry.segments)
    for (double v : seg.values) out.push_back({v, seg.version});
  if (static_cast<int64_t>(out.size()) != entry.partial_tokens)
    fail(ErrorCode::invalid_state, "segment token count does not match entry length");
  return out;
}

std::vector<double> reinforce_pp_advantage(std::span<const double> rewards) {
  if (rewards.empty()) fail(ErrorCode::invalid_argument, "reinforce_pp: empty batch");
  if (rewards.size() < 2)
    fail(ErrorCode::invalid_argument, "reinforce_pp: batch statistics need at least 2 rewards");
  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd == 0.0) return out;
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

std::vector<double> gae_advantage(std::span<const double> rewards,
                                  std::span<const double> values, double gamma,
                                  double lambda) {
  if (values.size() != rewards.size() + 1)
    fail(ErrorCode::invalid_argument, "gae: expected " + std::to_string(rewards.size() + 1) +
                                          " values (one bootstrap), got " +
                                          std::to_string(values.size()));
  std::vector<double> adv(rewards.size(), 0.0);
  double running = 0.0;
  for (size_t t = rewards.size(); t-- > 0;) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

ObjectiveResult ppo_objective(std::span<const double> new_logprobs,
                              std::span<const double> behavior_logprobs,
                              std::span<const double> advantages, const Hyperparams& hp) {
  if (new_logprobs.size() != behavior_logprobs.size() ||
      new_logprobs.size() != advantages.size())
    fail(ErrorCode::invalid_argument, "ppo_objective: input lengths differ");
  if (new_logprobs.empty()) fail(ErrorCode::invalid_argument, "ppo_objective: no tokens");
  ObjectiveResult result;
  result.ratios.reserve(new_logprobs.size());
  double sum = 0.0;
  const double lo = 1.0 - hp.eps_low;
  const double hi = 1.0 + hp.eps_high;
  for (size_t t = 0; t < new_logprobs.size(); ++t) {
    if (!std::isfinite(new_logprobs[t]) || !std::isfinite(behavior_logprobs[t]) ||
        !std::isfinite(advantages[t]))
      fail(ErrorCode::invalid_argument,
           "ppo_objective: non-finite input at token " + std::to_string(t));
    const double ratio = std::exp(new_logprobs[t] - behavior_logprobs[t]);
    const double a = advantages[t];
    sum += std::min(ratio * a, std::clamp(ratio, lo, hi) * a);
    result.ratios.push_back(ratio);
  }
  result.objective = sum / static_cast<double>(new_logprobs.size());
  return result;
}

double synth_reward(RequestId request, int64_t length, int64_t cap) {
  // Independent stream from synth_logprob: version -1 is never a policy version.
  const double u = (synth_logprob(request, 0, -1) + 0.05) / -4.95;  // [0, 1)
  const double frac = cap > 0 ? static_cast<double>(length) / static_cast<double>(cap) : 0.0;
  const double p_success = std::clamp(0.8 - 0.6 * frac, 0.05, 0.95);
  return u < p_success ? 1.0 : 0.0;
}

double TrainBatch::mean_length() const {
  if (trajectories.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : trajectories) sum += static_cast<double>(t.length);
  return sum / static_cast<double>(trajectories.size());
}

int64_t TrainBatch::token_count() const {
  int64_t n = 0;
  for (const auto& t : trajectories) n += t.length;
  return n;
}

void compute_advantages(TrainBatch& batch, AdvantageKind kind, const Hyperparams& hp) {
  std::vector<double> rewards;
  rewards.reserve(batch.trajectories.size());
  for (const auto& t : batch.trajectories) rewards.push_back(t.reward);
  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean = rewards.empty() ? 0.0 : mean / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  batch.reward_mean = mean;
  batch.reward_std = rewards.empty() ? 0.0 : std::sqrt(var / n);

  if (kind == AdvantageKind::reinforce_pp) {
    const auto adv = reinforce_pp_advantage(rewards);
    for (size_t i = 0; i < batch.trajectories.size(); ++i) {
      auto& t = batch.trajectories[i];
      t.advantages.assign(static_cast<size_t>(t.length), adv[i]);
    }
    return;
  }
  for (auto& t : batch.trajectories) {
    std::vector<double> step_rewards(static_cast<size_t>(t.length), 0.0);
    if (!step_rewards.empty()) step_rewards.back() = t.reward;
    const std::vector<double> values(step_rewards.size() + 1, 0.0);
    t.advantages = gae_advantage(step_rewards, values, hp.gamma, hp.lambda);
  }
}

ObjectiveResult evaluate_objective(const TrainBatch& batch, PolicyVersion current,
                                   const Hyperparams& hp) {
  const auto tokens = static_cast<size_t>(batch.token_count());
  std::vector<double> fresh, behavior, adv;
  fresh.reserve(tokens);
  behavior.reserve(tokens);
  adv.reserve(tokens);
  for (const auto& t : batch.trajectories) {
    for (size_t i = 0; i < t.behavior.size(); ++i) {
      fresh.push_back(synth_logprob(t.request_id, static_cast<int64_t>(i), current));
      behavior.push_back(t.behavior[i].logprob);
      adv.push_back(t.advantages.at(i));
    }
  }
  return ppo_objective(fresh, behavior, adv, hp);
}

StalenessStats staleness_of(const TrainBatch& batch, PolicyVersion version_at_update) {
  StalenessStats s;
  for (const auto& t : batch.trajectories)
    for (const auto& tok : t.behavior) ++s.histogram[version_at_update - tok.version];
  for (const auto& [lag, count] : s.histogram) s.tokens += count;
  if (s.histogram.empty()) return s;
  s.max = s.histogram.rbegin()->first;
  int64_t cumulative = 0;
  for (const auto& [lag, count] : s.histogram) {
    cumulative += count;
    if (2 * cumulative >= s.tokens) {
      s.p50 = lag;
      break;
    }
  }
  return s;
}

UpdateResult apply_update(PolicyClock& clock, const TrainBatch& batch) {
  UpdateResult r;
  r.version_at_update = clock.version();
  r.staleness = staleness_of(batch, r.version_at_update);
  r.new_version = clock.advance();
  return r;
}

}  // namespace sortedrl
