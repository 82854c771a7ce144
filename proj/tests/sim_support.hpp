#pragma once

#include <vector>

#include "sortedrl/config.hpp"
#include "sortedrl/workload.hpp"

namespace sortedrl::testing {

/// One sample per prompt with the given hidden lengths.
inline std::vector<PromptSpec> stream_of(const std::vector<int64_t>& lengths, int64_t per_group = 0) {
  std::vector<PromptSpec> out;
  for (size_t i = 0; i < lengths.size(); ++i) {
    PromptSpec p;
    p.prompt_id = static_cast<int64_t>(i);
    p.group_epoch = per_group > 0 ? static_cast<int64_t>(i) / per_group : 0;
    p.intrinsic_lengths = {lengths[i]};
    out.push_back(p);
  }
  return out;
}

inline SimConfig small_config(SchedulerMode mode, int64_t q, int64_t b, int64_t n, int64_t update) {
  SimConfig c;
  c.engine.capacity = q;
  c.engine.max_tokens = 4096;
  c.scheduler.mode = mode;
  c.scheduler.rollout_batch = b;
  c.scheduler.group_size = n;
  c.scheduler.update_batch_size = update;
  c.workload.prompt_count = b * n;
  return c;
}

}  // namespace sortedrl::testing
