// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/simulation.hpp"

#include <algorithm>
#include <limits>

#include "sortedrl/error.hpp"

namespace sortedrl {

namespace {

SimConfig prepared(SimConfig config) {
  config.scheduler.samples_per_prompt = config.workload.samples_per_prompt;
  config.validate();
  return config;
}

}  // namespace

Simulation::Simulation(SimConfig config, SimulationHooks hooks)
    : Simulation(config,
                 build_prompt_stream(config.workload,
                                     prepared(config).scheduler.group_prompts(), config.seed),
                 std::move(hooks)) {}

Simulation::Simulation(SimConfig config, std::vector<PromptSpec> stream, SimulationHooks hooks)
    : config_(prepared(std::move(config))),
      hooks_(std::move(hooks)),
      engine_(config_.engine),
      stream_(std::move(stream)) {
  const auto& sched = config_.scheduler;
  for (size_t i = 0; i < stream_.size(); ++i) {
    const PromptSpec& p = stream_[i];
    if (p.prompt_id != static_cast<int64_t>(i) ||
        p.samples_per_prompt != config_.workload.samples_per_prompt ||
        p.intrinsic_lengths.size() != static_cast<size_t>(p.samples_per_prompt))
      fail(ErrorCode::invalid_argument,
           "prompt stream entry " + std::to_string(i) +
               ": ids must be 0..N-1 with workload.samples_per_prompt lengths each");
    for (int64_t len : p.intrinsic_lengths)
      if (len < 1) fail(ErrorCode::invalid_argument, "prompt stream entry " + std::to_string(i) + ": length must be >= 1");
  }
  if (hooks_.on_event) engine_.set_event_sink(hooks_.on_event);
  report_.mode = std::string(to_string(sched.mode));
  report_.capacity = config_.engine.capacity;
  report_.step_cost = config_.engine.cost;
  report_.seed = config_.seed;
}

void Simulation::emit(EventKind kind, RequestId id, int64_t epoch) {
  if (!hooks_.on_event) return;
  hooks_.on_event({engine_.clock(), kind, id, engine_.running_count(), clock_.version(), epoch});
}

namespace {

BufferEntry fresh_entry(const PromptSpec& spec, int sample, int64_t epoch, const SimConfig& config,
                        PolicyVersion version) {
  BufferEntry e;
  e.prompt_id = spec.prompt_id;
  e.sample_index = sample;
  e.request_id = spec.prompt_id * spec.samples_per_prompt + sample;
  e.group_epoch = epoch;
  e.intrinsic_length = drifted_length(config.workload.model,
                                      spec.intrinsic_lengths[static_cast<size_t>(sample)],
                                      config.workload.length_drift, version);
  return e;
}

}  // namespace

bool Simulation::load_group() {
  if (config_.scheduler.mode == SchedulerMode::no_grouping)
    fail(ErrorCode::invalid_state, "load_group: the no_grouping mode loads prompts continuously");
  if (group_.trajectories_outstanding > 0)
    fail(ErrorCode::invalid_state,
         "load_group: group " + std::to_string(group_.group_epoch) + " still has " +
             std::to_string(group_.trajectories_outstanding) + " outstanding trajectories");
  if (cursor_ >= stream_.size()) return false;

  const auto want = static_cast<size_t>(config_.scheduler.group_prompts());
  const size_t take = std::min(want, stream_.size() - cursor_);
  const int64_t epoch = group_.group_epoch + 1;
  for (size_t i = 0; i < take; ++i) {
    const PromptSpec& spec = stream_[cursor_ + i];
    for (int s = 0; s < spec.samples_per_prompt; ++s)
      buffer_.add_fresh(fresh_entry(spec, s, epoch, config_, clock_.version()));
  }
  cursor_ += take;
  group_.group_epoch = epoch;
  group_.loaded_prompts = static_cast<int64_t>(take);
  group_.trajectories_outstanding = static_cast<int64_t>(take) * config_.workload.samples_per_prompt;
  group_.partial = take < want;
  ++report_.groups_loaded;
  if (group_.partial) report_.partial_final_group = true;
  emit(EventKind::load_group, -1, epoch);
  if (hooks_.on_load) hooks_.on_load(*this, epoch);
  return true;
}

void Simulation::top_up() {
  const int64_t pool = config_.scheduler.group_trajectories();
  const int G = config_.workload.samples_per_prompt;
  while (cursor_ < stream_.size() && buffer_.incomplete_count() + G <= pool) {
    const PromptSpec& spec = stream_[cursor_++];
    for (int s = 0; s < spec.samples_per_prompt; ++s)
      buffer_.add_fresh(fresh_entry(spec, s, spec.group_epoch, config_, clock_.version()));
  }
}

std::vector<ReadyTrajectory> Simulation::run_rollout_iteration() {
  const auto& sched = config_.scheduler;
  const bool sync = is_synchronous(sched.mode);
  const PolicyVersion version = clock_.version();
  const int64_t iteration = iterations_++;

  for (const BufferEntry& entry : buffer_.resume_candidates())
    engine_.admit(entry.to_request(), version);

  const int64_t target = sync ? std::numeric_limits<int64_t>::max() : sched.effective_ready_target();
  const double min_util = sync ? 0.0 : sched.early_term.min_util;
  const int64_t steps_before = engine_.steps();

  std::vector<ReadyTrajectory> harvested;
  bool early = false;
  while (!engine_.idle()) {
    for (EngineOutput& out : engine_.step(version)) {
      buffer_.mark_complete(out);
      report_.harvested_tokens += out.total_tokens;
      harvested.push_back({{out.prompt_id, out.sample_index}, out.id, out.total_tokens,
                           out.group_epoch, version});
    }
    if (engine_.idle()) break;
    TerminationProbe probe;
    probe.completed_this_iteration = static_cast<int64_t>(harvested.size());
    probe.ready_target = target;
    probe.running = engine_.running_count();
    probe.capacity = engine_.capacity();
    probe.queued = engine_.queued_count();
    probe.min_util = min_util;
    probe.refill_available = sched.mode == SchedulerMode::no_grouping &&
                             cursor_ < stream_.size() && !harvested.empty();
    if (check_early_termination(probe)) {
      early = true;
      break;
    }
  }

  int64_t scavenged = 0;
  for (const EngineOutput& partial : engine_.terminate_all()) {
    report_.discarded_tokens +=
        buffer_.scavenge(partial, rollout_mode_of(sched.mode)).discarded_tokens;
    ++scavenged;
  }
  emit(EventKind::harvest, -1, group_.group_epoch);

  ready_.insert(ready_.end(), harvested.begin(), harvested.end());
  IterationRecord rec{iteration, group_.group_epoch, static_cast<int64_t>(harvested.size()),
                      scavenged, engine_.steps() - steps_before, engine_.clock(), early};
  report_.iterations.push_back(rec);
  if (hooks_.on_iteration) hooks_.on_iteration(*this, rec);
  return harvested;
}

void Simulation::feed_trainer() {
  const auto& sched = config_.scheduler;
  BatchPlan plan = sched.mode == SchedulerMode::baseline_sync
                       ? slice_in_arrival_order(ready_, sched.update_batch_size)
                       : select_train_batches(ready_, sched.update_batch_size);
  for (size_t i = 0; i < plan.size(); ++i) {
    if (sched.max_updates > 0 && static_cast<int64_t>(report_.updates.size()) >= sched.max_updates) {
      // Unused batches go back to the ready pool untouched.
      for (size_t j = i; j < plan.size(); ++j)
        ready_.insert(ready_.end(), plan[j].begin(), plan[j].end());
      return;
    }
    train(plan[i]);
  }
}

void Simulation::train(const std::vector<ReadyTrajectory>& batch) {
  TrainBatch tb;
  tb.trajectories.reserve(batch.size());
  int64_t epoch = std::numeric_limits<int64_t>::max();
  for (const ReadyTrajectory& r : batch) {
    BufferEntry entry = buffer_.consume(r.key);
    Trajectory t;
    t.prompt_id = entry.prompt_id;
    t.sample_index = entry.sample_index;
    t.request_id = entry.request_id;
    t.group_epoch = entry.group_epoch;
    t.length = entry.partial_tokens;
    t.harvest_version = r.harvest_version;
    t.reward = synth_reward(entry.request_id, entry.partial_tokens, config_.engine.max_tokens);
    t.behavior = assemble_behavior_logprobs(entry);
    epoch = std::min(epoch, entry.group_epoch);
    tb.trajectories.push_back(std::move(t));
  }
  compute_advantages(tb, config_.advantage, config_.learner);
  const ObjectiveResult objective = evaluate_objective(tb, clock_.version(), config_.learner);
  UpdateResult upd = apply_update(clock_, tb);

  UpdateRecord rec;
  rec.step = static_cast<int64_t>(report_.updates.size()) + 1;
  rec.version = upd.version_at_update;
  rec.group_epoch = epoch;
  rec.index_in_group = batches_per_group_[epoch]++;
  rec.batch_size = static_cast<int64_t>(batch.size());
  rec.mean_length = tb.mean_length();
  rec.reward_mean = tb.reward_mean;
  rec.staleness = std::move(upd.staleness);
  rec.objective = objective.objective;
  rec.clock = engine_.clock();

  report_.delivered_tokens += tb.token_count();
  report_.delivered_trajectories += rec.batch_size;
  for (const Trajectory& t : tb.trajectories) report_.delivered_lengths.push_back(t.length);
  report_.update_time += config_.update_cost;
  if (config_.scheduler.mode != SchedulerMode::no_grouping)
    group_.trajectories_outstanding -= rec.batch_size;

  emit(EventKind::update, -1, epoch);
  report_.updates.push_back(rec);
  if (hooks_.on_update) hooks_.on_update(*this, tb, report_.updates.back());
}

void Simulation::drop_ready() {
  for (const ReadyTrajectory& r : ready_) buffer_.consume(r.key);
  report_.dropped_trajectories += static_cast<int64_t>(ready_.size());
  if (config_.scheduler.mode != SchedulerMode::no_grouping)
    group_.trajectories_outstanding -= static_cast<int64_t>(ready_.size());
  ready_.clear();
}

RunReport Simulation::run() {
  if (finished_) fail(ErrorCode::invalid_state, "run: simulation already finished");
  const auto& sched = config_.scheduler;
  auto capped = [&] {
    return sched.max_updates > 0 &&
           static_cast<int64_t>(report_.updates.size()) >= sched.max_updates;
  };

  if (sched.mode == SchedulerMode::no_grouping) {
    while (!capped()) {
      if (iterations_ > 0 && cursor_ >= stream_.size()) break;
      top_up();
      if (buffer_.incomplete_count() == 0) break;
      run_rollout_iteration();
      feed_trainer();
    }
  } else {
    while (!capped()) {
      if (group_.trajectories_outstanding == 0 && !load_group()) break;
      if (buffer_.incomplete_count() > 0) {
        run_rollout_iteration();
        feed_trainer();
      }
      // A short final group can leave fewer than one batch behind.
      if (!capped() && buffer_.incomplete_count() == 0 &&
          static_cast<int64_t>(ready_.size()) < sched.update_batch_size)
        drop_ready();
    }
  }
  finish();
  return report_;
}

void Simulation::finish() {
  finished_ = true;
  report_.dropped_trajectories += static_cast<int64_t>(ready_.size());
  report_.unconsumed_trajectories = buffer_.incomplete_count();
  report_.buffered_tokens = buffer_.buffered_tokens();
  report_.emitted_tokens = engine_.emitted_tokens();
  report_.trace = engine_.trace();
  report_.total_time = report_.trace.total_time;
  if (!report_.trace.empty() && report_.total_time > 0.0) {
    report_.bubble_ratio = bubble_ratio(report_.trace, config_.engine.capacity);
    report_.throughput = throughput(report_.trace, report_.emitted_tokens);
    report_.goodput = throughput(report_.trace, report_.delivered_tokens);
  }
  const double wall = report_.total_time + report_.update_time;
  report_.end_to_end_bubble_ratio =
      wall > 0.0 ? (report_.bubble_ratio * report_.total_time + report_.update_time) / wall : 0.0;
  if (config_.include_update_time) report_.bubble_ratio = report_.end_to_end_bubble_ratio;
}

}  // namespace sortedrl
