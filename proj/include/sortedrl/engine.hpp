// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sortedrl {

using RequestId = int64_t;
using PolicyVersion = int64_t;

/// Deterministic stand-in for the behavior policy's token log-probability.
/// Pure in (request, token index, policy version); always in [-5.0, -0.05].
double synth_logprob(RequestId request, int64_t token_index, PolicyVersion version);

/// Wall-clock cost of one decode step: base + per_active * active.
/// per_active == 0 is the memory-bound (occupancy independent) model.
struct StepCost {
  double base = 1.0;
  double per_active = 0.0;

  double operator()(int64_t active) const {
    return base + per_active * static_cast<double>(active);
  }
};

struct TraceRecord {
  double duration = 0.0;
  int64_t active = 0;
};

/// One record per executed decode step, with the pre-step active count.
struct StepTrace {
  std::vector<TraceRecord> records;
  double total_time = 0.0;

  void append(double duration, int64_t active) {
    records.push_back({duration, active});
    total_time += duration;
  }
  bool empty() const { return records.empty(); }
};

/// Per-token logprobs produced under one policy version. Values cover
/// trajectory token indices [start_index, start_index + values.size()).
struct LogprobSegment {
  PolicyVersion version = 0;
  int64_t start_index = 0;
  std::vector<double> values;
};

struct GenRequest {
  RequestId id = 0;
  int64_t prompt_id = 0;
  int sample_index = 0;
  int64_t group_epoch = 0;
  int64_t intrinsic_length = 0;  // hidden; only the engine consults it
  int64_t prefix_tokens = 0;     // tokens already generated in earlier sessions
};

struct RunningRequest {
  GenRequest request;
  int64_t tokens_emitted = 0;  // this session
  int64_t total_tokens = 0;    // including the resumed prefix
  int64_t target = 0;          // min(intrinsic_length, cap)
  LogprobSegment segment;
};

/// What the engine hands back for a request, either on natural completion
/// (`completed`) or on termination.
struct EngineOutput {
  RequestId id = 0;
  int64_t prompt_id = 0;
  int sample_index = 0;
  int64_t group_epoch = 0;
  int64_t tokens_emitted = 0;
  int64_t total_tokens = 0;
  bool completed = false;
  LogprobSegment segment;
};

enum class EventKind { admit, activate, step, complete, terminate, load_group, harvest, update };

std::string_view to_string(EventKind kind);

struct EngineEvent {
  double t = 0.0;
  EventKind kind = EventKind::step;
  RequestId request_id = -1;
  int64_t active_count = 0;
  PolicyVersion policy_version = 0;
  int64_t group_epoch = -1;
};

using EventSink = std::function<void(const EngineEvent&)>;

struct EngineConfig {
  int64_t capacity = 128;  // Q
  int64_t max_tokens = 4096;
  StepCost cost;

  void validate() const;
};

/// Continuous-batching rollout engine. At most `capacity` requests decode
/// concurrently; the rest wait FIFO and are activated as soon as a slot frees.
/// Single-owner, not thread-safe.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  void admit(const GenRequest& request, PolicyVersion version);

  /// Advances every active request by one token. Returns the requests that
  /// completed during this step. Throws Error(invalid_state) on an empty engine.
  std::vector<EngineOutput> step(PolicyVersion version);

  /// Removes the named requests (active or queued) and returns what each had
  /// generated this session. All ids are checked before anything is removed.
  std::vector<EngineOutput> terminate(std::span<const RequestId> ids);
  std::vector<EngineOutput> terminate_all();

  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

  const EngineConfig& config() const { return config_; }
  int64_t capacity() const { return config_.capacity; }
  int64_t running_count() const { return static_cast<int64_t>(running_.size()); }
  int64_t queued_count() const { return static_cast<int64_t>(queue_.size()); }
  bool idle() const { return running_.empty() && queue_.empty(); }
  bool contains(RequestId id) const { return ids_.count(id) != 0; }
  double clock() const { return clock_; }
  const StepTrace& trace() const { return trace_; }
  int64_t emitted_tokens() const { return emitted_tokens_; }
  int64_t steps() const { return static_cast<int64_t>(trace_.records.size()); }
  const std::vector<RunningRequest>& running() const { return running_; }

 private:
  struct Pending {
    GenRequest request;
    PolicyVersion version;
  };

  void activate(Pending pending);
  void backfill();
  void emit(EventKind kind, RequestId id, PolicyVersion version, int64_t epoch = -1);
  static EngineOutput output_from(RunningRequest&& r, bool completed);

  EngineConfig config_;
  std::vector<RunningRequest> running_;
  std::deque<Pending> queue_;
  std::unordered_set<RequestId> ids_;
  StepTrace trace_;
  double clock_ = 0.0;
  int64_t emitted_tokens_ = 0;
  EventSink sink_;
};

}  // namespace sortedrl
