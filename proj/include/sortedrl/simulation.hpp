// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "sortedrl/buffer.hpp"
#include "sortedrl/config.hpp"
#include "sortedrl/engine.hpp"
#include "sortedrl/learner.hpp"
#include "sortedrl/metrics.hpp"
#include "sortedrl/scheduler.hpp"
#include "sortedrl/workload.hpp"

namespace sortedrl {

class Simulation;

/// Observation points. Hooks run synchronously and must not drive the
/// simulation themselves.
struct SimulationHooks {
  std::function<void(const EngineEvent&)> on_event;
  std::function<void(const Simulation&, const TrainBatch&, const UpdateRecord&)> on_update;
  std::function<void(const Simulation&, const IterationRecord&)> on_iteration;
  std::function<void(const Simulation&, int64_t group_epoch)> on_load;
};

/// One rollout/train loop over a prompt stream: the engine, the buffer, the
/// scheduling policy and the learner bookkeeping, all on the calling thread.
class Simulation {
 public:
  explicit Simulation(SimConfig config, SimulationHooks hooks = {});
  /// Replays a given prompt stream instead of sampling one from the
  /// workload model. Each prompt must carry samples_per_prompt lengths.
  Simulation(SimConfig config, std::vector<PromptSpec> stream, SimulationHooks hooks = {});

  /// Drives the loop until the stream is drained (or max_updates) and
  /// returns the finished report. Callable once.
  RunReport run();

  /// Loads the next group (n*b prompts, or b in the synchronous modes).
  /// Returns false once the stream is exhausted. Throws invalid_state while
  /// trajectories of the current group are still outstanding.
  bool load_group();

  /// Admits every incomplete buffer entry, steps until early termination
  /// (or until everything admitted completes) and harvests. Returns the
  /// trajectories that completed in this iteration.
  std::vector<ReadyTrajectory> run_rollout_iteration();

  /// Slices ready trajectories into train batches and applies the updates.
  void feed_trainer();

  const SimConfig& config() const { return config_; }
  const Engine& engine() const { return engine_; }
  const RolloutBuffer& buffer() const { return buffer_; }
  const GroupState& group() const { return group_; }
  const std::vector<ReadyTrajectory>& ready() const { return ready_; }
  PolicyVersion policy_version() const { return clock_.version(); }
  const std::vector<PromptSpec>& prompt_stream() const { return stream_; }
  size_t prompts_loaded() const { return cursor_; }
  const RunReport& report() const { return report_; }

 private:
  void top_up();
  void train(const std::vector<ReadyTrajectory>& batch);
  void drop_ready();
  void finish();
  void emit(EventKind kind, RequestId id, int64_t epoch);

  SimConfig config_;
  SimulationHooks hooks_;
  Engine engine_;
  RolloutBuffer buffer_;
  PolicyClock clock_;
  GroupState group_;
  std::vector<PromptSpec> stream_;
  size_t cursor_ = 0;
  std::vector<ReadyTrajectory> ready_;
  std::map<int64_t, int64_t> batches_per_group_;
  int64_t iterations_ = 0;
  bool finished_ = false;
  RunReport report_;
};

}  // namespace sortedrl
