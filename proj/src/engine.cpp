// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sortedrl/error.hpp"

namespace sortedrl {
namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double synth_logprob(RequestId request, int64_t token_index, PolicyVersion version) {
  uint64_t h = splitmix64(static_cast<uint64_t>(version) ^ 0x5bd1e9955bd1e995ULL);
  h = splitmix64(h ^ static_cast<uint64_t>(token_index));
  h = splitmix64(h ^ static_cast<uint64_t>(request));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return -0.05 - 4.95 * u;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::admit: return "admit";
    case EventKind::activate: return "activate";
    case EventKind::step: return "step";
    case EventKind::complete: return "complete";
    case EventKind::terminate: return "terminate";
    case EventKind::load_group: return "load_group";
    case EventKind::harvest: return "harvest";
    case EventKind::update: return "update";
  }
  return "unknown";
}

void EngineConfig::validate() const {
  if (capacity < 1) fail(ErrorCode::invalid_argument, "engine.capacity: must be >= 1");
  if (max_tokens < 1) fail(ErrorCode::invalid_argument, "engine.cap: must be >= 1");
  if (!(cost.base >= 0.0) || !std::isfinite(cost.base))
    fail(ErrorCode::invalid_argument, "engine.step_base: must be >= 0");
  if (!(cost.per_active >= 0.0) || !std::isfinite(cost.per_active))
    fail(ErrorCode::invalid_argument, "engine.step_per_active: must be >= 0");
  if (!(cost(1) > 0.0))
    fail(ErrorCode::invalid_argument,
         "engine.step_base: step cost must be positive for a non-empty batch");
}

Engine::Engine(EngineConfig config) : config_(config) {
  config_.validate();
  running_.reserve(static_cast<size_t>(config_.capacity));
}

void Engine::emit(EventKind kind, RequestId id, PolicyVersion version, int64_t epoch) {
  if (sink_) sink_({clock_, kind, id, running_count(), version, epoch});
}

void Engine::admit(const GenRequest& request, PolicyVersion version) {
  if (ids_.count(request.id) != 0)
    fail(ErrorCode::duplicate_request,
         "request id " + std::to_string(request.id) + " is already running or queued");
  const int64_t target = std::min(request.intrinsic_length, config_.max_tokens);
  if (request.prefix_tokens < 0 || request.prefix_tokens >= target)
    fail(ErrorCode::invalid_argument,
         "request id " + std::to_string(request.id) + " has no tokens left to generate");
  ids_.insert(request.id);
  emit(EventKind::admit, request.id, version, request.group_epoch);
  if (running_count() < config_.capacity) {
    activate({request, version});
  } else {
    queue_.push_back({request, version});
  }
}

void Engine::activate(Pending pending) {
  RunningRequest r;
  r.target = std::min(pending.request.intrinsic_length, config_.max_tokens);
  r.total_tokens = pending.request.prefix_tokens;
  r.segment.version = pending.version;
  r.segment.start_index = pending.request.prefix_tokens;
  r.request = pending.request;
  running_.push_back(std::move(r));
  emit(EventKind::activate, pending.request.id, pending.version, pending.request.group_epoch);
}

void Engine::backfill() {
  while (running_count() < config_.capacity && !queue_.empty()) {
    Pending next = std::move(queue_.front());
    queue_.pop_front();
    activate(std::move(next));
  }
}

EngineOutput Engine::output_from(RunningRequest&& r, bool completed) {
  EngineOutput out;
  out.id = r.request.id;
  out.prompt_id = r.request.prompt_id;
  out.sample_index = r.request.sample_index;
  out.group_epoch = r.request.group_epoch;
  out.tokens_emitted = r.tokens_emitted;
  out.total_tokens = r.total_tokens;
  out.completed = completed;
  out.segment = std::move(r.segment);
  return out;
}

std::vector<EngineOutput> Engine::step(PolicyVersion version) {
  if (running_.empty())
    fail(ErrorCode::invalid_state, "step called on an empty engine");

  const int64_t active = running_count();
  const double duration = config_.cost(active);
  clock_ += duration;
  trace_.append(duration, active);
  emit(EventKind::step, -1, version);

  std::vector<EngineOutput> finished;
  std::vector<RunningRequest> still_running;
  still_running.reserve(running_.size());
  for (auto& r : running_) {
    if (r.tokens_emitted == 0) {
      r.segment.version = version;  // activated from the queue after an update
    } else if (r.segment.version != version) {
      fail(ErrorCode::invalid_state,
           "policy version changed under running request " + std::to_string(r.request.id));
    }
    r.segment.values.push_back(synth_logprob(r.request.id, r.total_tokens, version));
    ++r.tokens_emitted;
    ++r.total_tokens;
    ++emitted_tokens_;
    if (r.total_tokens == r.target) {
      ids_.erase(r.request.id);
      finished.push_back(output_from(std::move(r), true));
    } else {
      still_running.push_back(std::move(r));
    }
  }
  running_ = std::move(still_running);
  for (const auto& f : finished) emit(EventKind::complete, f.id, version, f.group_epoch);
  backfill();
  return finished;
}

std::vector<EngineOutput> Engine::terminate(std::span<const RequestId> ids) {
  for (RequestId id : ids) {
    if (ids_.count(id) == 0)
      fail(ErrorCode::unknown_request, "unknown request id " + std::to_string(id));
  }
  std::vector<EngineOutput> outputs;
  outputs.reserve(ids.size());
  for (RequestId id : ids) {
    auto run_it = std::find_if(running_.begin(), running_.end(),
                               [id](const RunningRequest& r) { return r.request.id == id; });
    if (run_it != running_.end()) {
      outputs.push_back(output_from(std::move(*run_it), false));
      running_.erase(run_it);
    } else {
      auto q_it = std::find_if(queue_.begin(), queue_.end(),
                               [id](const Pending& p) { return p.request.id == id; });
      if (q_it == queue_.end())
        fail(ErrorCode::unknown_request, "unknown request id " + std::to_string(id));
      RunningRequest idle;
      idle.request = q_it->request;
      idle.total_tokens = q_it->request.prefix_tokens;
      idle.segment.version = q_it->version;
      idle.segment.start_index = q_it->request.prefix_tokens;
      outputs.push_back(output_from(std::move(idle), false));
      queue_.erase(q_it);
    }
    ids_.erase(id);
    emit(EventKind::terminate, id, outputs.back().segment.version, outputs.back().group_epoch);
  }
  backfill();
  return outputs;
}

std::vector<EngineOutput> Engine::terminate_all() {
  std::vector<EngineOutput> outputs;
  outputs.reserve(running_.size() + queue_.size());
  for (auto& r : running_) {
    ids_.erase(r.request.id);
    outputs.push_back(output_from(std::move(r), false));
  }
  running_.clear();
  for (auto& p : queue_) {
    ids_.erase(p.request.id);
    RunningRequest idle;
    idle.request = p.request;
    idle.total_tokens = p.request.prefix_tokens;
    idle.segment.version = p.version;
    idle.segment.start_index = p.request.prefix_tokens;
    outputs.push_back(output_from(std::move(idle), false));
  }
  queue_.clear();
  for (const auto& o : outputs) emit(EventKind::terminate, o.id, o.segment.version, o.group_epoch);
  return outputs;
}

}  // namespace sortedrl
