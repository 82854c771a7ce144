// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/buffer.hpp"

#include <algorithm>
#include <string>

#include "json.hpp"

#include "sortedrl/error.hpp"

namespace sortedrl {
namespace {

std::string describe(const BufferEntry& e) {
  return "entry (prompt " + std::to_string(e.prompt_id) + ", sample " +
         std::to_string(e.sample_index) + ")";
}

}  // namespace

std::string_view to_string(RolloutMode mode) {
  return mode == RolloutMode::partial ? "partial" : "fully_on_policy";
}

GenRequest BufferEntry::to_request() const {
  GenRequest r;
  r.id = request_id;
  r.prompt_id = prompt_id;
  r.sample_index = sample_index;
  r.group_epoch = group_epoch;
  r.intrinsic_length = intrinsic_length;
  r.prefix_tokens = partial_tokens;
  return r;
}

void RolloutBuffer::add_fresh(BufferEntry entry) {
  const EntryKey key = entry.key();
  if (entries_.count(key) != 0 || by_request_.count(entry.request_id) != 0)
    fail(ErrorCode::duplicate_request, describe(entry) + " is already buffered");
  entry.partial_tokens = 0;
  entry.segments.clear();
  entry.completed = false;
  entry.lifecycle = 0;
  by_request_.emplace(entry.request_id, key);
  entries_.emplace(key, std::move(entry));
}

BufferEntry& RolloutBuffer::lookup(RequestId id) {
  auto it = by_request_.find(id);
  if (it == by_request_.end())
    fail(ErrorCode::unknown_request, "request id " + std::to_string(id) + " is not buffered");
  return entries_.at(it->second);
}

const BufferEntry* RolloutBuffer::find(const EntryKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const BufferEntry* RolloutBuffer::find(RequestId id) const {
  auto it = by_request_.find(id);
  return it == by_request_.end() ? nullptr : find(it->second);
}

void RolloutBuffer::append_segment(BufferEntry& entry, const LogprobSegment& segment) {
  if (segment.values.empty()) return;
  if (segment.start_index != entry.partial_tokens)
    fail(ErrorCode::invalid_state,
         describe(entry) + ": segment starts at token " + std::to_string(segment.start_index) +
             " but the entry holds " + std::to_string(entry.partial_tokens));
  if (!entry.segments.empty()) {
    LogprobSegment& last = entry.segments.back();
    if (segment.version < last.version)
      fail(ErrorCode::invalid_state, describe(entry) + ": segment policy version went backwards");
    if (segment.version == last.version) {
      // Resumed without an intervening update: same policy, one segment.
      last.values.insert(last.values.end(), segment.values.begin(), segment.values.end());
      entry.partial_tokens += static_cast<int64_t>(segment.values.size());
      return;
    }
  }
  entry.segments.push_back(segment);
  entry.partial_tokens += static_cast<int64_t>(segment.values.size());
}

ScavengeResult RolloutBuffer::scavenge(const EngineOutput& partial, RolloutMode mode) {
  BufferEntry& entry = lookup(partial.id);
  if (entry.completed) fail(ErrorCode::invalid_state, describe(entry) + " is already complete");
  if (partial.completed)
    fail(ErrorCode::invalid_argument, describe(entry) + ": completed output passed to scavenge");
  ScavengeResult result;
  const auto produced = static_cast<int64_t>(partial.segment.values.size());
  if (mode == RolloutMode::fully_on_policy) {
    result.discarded_tokens = produced;
  } else {
    append_segment(entry, partial.segment);
    result.kept_tokens = produced;
  }
  ++entry.lifecycle;
  return result;
}

std::vector<std::reference_wrapper<const BufferEntry>> RolloutBuffer::resume_candidates() const {
  std::vector<std::reference_wrapper<const BufferEntry>> out;
  for (const auto& [key, entry] : entries_)
    if (!entry.completed) out.emplace_back(entry);
  // entries_ is already keyed by (prompt_id, sample_index); a stable sort
  // on lifecycle keeps that as the tie-break.
  std::stable_sort(out.begin(), out.end(), [](const BufferEntry& a, const BufferEntry& b) {
    return a.lifecycle > b.lifecycle;
  });
  return out;
}

void RolloutBuffer::mark_complete(const EngineOutput& final_output) {
  BufferEntry& entry = lookup(final_output.id);
  if (entry.completed) fail(ErrorCode::invalid_state, describe(entry) + " completed twice");
  if (!final_output.completed)
    fail(ErrorCode::invalid_argument, describe(entry) + ": output is not a completion");
  append_segment(entry, final_output.segment);
  entry.completed = true;
}

BufferEntry RolloutBuffer::consume(const EntryKey& key) {
  auto it = entries_.find(key);
  if (it == entries_.end())
    fail(ErrorCode::invalid_state, "entry (prompt " + std::to_string(key.prompt_id) + ", sample " +
                                       std::to_string(key.sample_index) +
                                       ") is not buffered (already consumed?)");
  if (!it->second.completed)
    fail(ErrorCode::invalid_state, describe(it->second) + " is not complete");
  BufferEntry entry = std::move(it->second);
  entries_.erase(it);
  by_request_.erase(entry.request_id);
  return entry;
}

int64_t RolloutBuffer::incomplete_count() const {
  return static_cast<int64_t>(std::count_if(entries_.begin(), entries_.end(),
                                            [](const auto& kv) { return !kv.second.completed; }));
}

int64_t RolloutBuffer::completed_count() const {
  return static_cast<int64_t>(entries_.size()) - incomplete_count();
}

int64_t RolloutBuffer::buffered_tokens() const {
  int64_t total = 0;
  for (const auto& [key, entry] : entries_)
    if (!entry.completed) total += entry.partial_tokens;
  return total;
}

std::string RolloutBuffer::snapshot_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, e] : entries_) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : e.segments)
      segs.push_back({{"policy_version", s.version},
                      {"start_index", s.start_index},
                      {"tokens", s.values.size()}});
    out.push_back({{"prompt_id", e.prompt_id},
                   {"sample_index", e.sample_index},
                   {"request_id", e.request_id},
                   {"group_epoch", e.group_epoch},
                   {"partial_tokens", e.partial_tokens},
                   {"completed", e.completed},
                   {"lifecycle", e.lifecycle},
                   {"segments", std::move(segs)}});
  }
  return out.dump();
}

}  // namespace sortedrl
