// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sortedrl/engine.hpp"

namespace sortedrl {

/// What happens to tokens generated by an interrupted request.
enum class RolloutMode {
  fully_on_policy,  // discard; the prompt restarts from scratch
  partial,          // keep tokens and their behavior logprobs; resume later
};

struct EntryKey {
  int64_t prompt_id = 0;
  int sample_index = 0;

  auto operator<=>(const EntryKey&) const = default;
};

/// One trajectory's state across rollout iterations.
///
/// Invariants: the segment value counts sum to `partial_tokens`; segment
/// versions strictly increase; segments are contiguous in token index.
struct BufferEntry {
  int64_t prompt_id = 0;
  int sample_index = 0;
  RequestId request_id = 0;
  int64_t group_epoch = 0;
  int64_t intrinsic_length = 0;  // opaque prompt context handed back to the engine
  int64_t partial_tokens = 0;
  std::vector<LogprobSegment> segments;
  bool completed = false;
  int64_t lifecycle = 0;  // rollout iterations survived without completing

  EntryKey key() const { return {prompt_id, sample_index}; }
  GenRequest to_request() const;
};

struct ScavengeResult {
  int64_t kept_tokens = 0;
  int64_t discarded_tokens = 0;
};

/// Stateful rollout buffer. Completed entries stay until consumed exactly
/// once by the trainer, then are removed.
class RolloutBuffer {
 public:
  void add_fresh(BufferEntry entry);

  ScavengeResult scavenge(const EngineOutput& partial, RolloutMode mode);

  /// Incomplete entries, oldest survivors first:
  /// (lifecycle desc, prompt_id asc, sample_index asc).
  std::vector<std::reference_wrapper<const BufferEntry>> resume_candidates() const;

  void mark_complete(const EngineOutput& final_output);

  /// Removes and returns a completed entry. A second consume of the same key
  /// throws Error(invalid_state).
  BufferEntry consume(const EntryKey& key);

  const BufferEntry* find(const EntryKey& key) const;
  const BufferEntry* find(RequestId id) const;

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int64_t incomplete_count() const;
  int64_t completed_count() const;
  /// Tokens held by incomplete entries (resumable work).
  int64_t buffered_tokens() const;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [key, entry] : entries_) fn(entry);
  }

  /// JSON array of entries (logprob values elided to per-segment counts).
  std::string snapshot_json() const;

 private:
  BufferEntry& lookup(RequestId id);
  static void append_segment(BufferEntry& entry, const LogprobSegment& segment);

  std::map<EntryKey, BufferEntry> entries_;
  std::unordered_map<RequestId, EntryKey> by_request_;
};

std::string_view to_string(RolloutMode mode);

}  // namespace sortedrl
