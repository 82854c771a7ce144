// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sortedrl/engine.hpp"
#include "sortedrl/learner.hpp"
#include "sortedrl/scheduler.hpp"
#include "sortedrl/workload.hpp"

namespace sortedrl {

struct SimConfig {
  uint64_t seed = 1;
  WorkloadConfig workload;
  EngineConfig engine;
  SchedulerConfig scheduler;
  Hyperparams learner;
  AdvantageKind advantage = AdvantageKind::reinforce_pp;
  double update_cost = 0.0;          // simulated seconds charged per train step
  bool include_update_time = false;  // report bubble_ratio end to end
  std::string output_dir = "out";
  bool trace = false;

  /// Checks every module invariant plus cross-module ones; throws
  /// Error(invalid_argument) with a field-qualified message.
  void validate() const;
};

/// Parses the flat `key = value` format. `[section]` headers prefix the
/// following keys with `section.`; `#` starts a comment. Unknown keys and
/// malformed values raise Error(parse) carrying `origin:line`.
/// The result is validated.
SimConfig parse_config(std::string_view text, std::string_view origin = "<config>");
SimConfig load_config(const std::filesystem::path& path);

/// Sets one dotted key from its textual value (no validation).
void set_config_value(SimConfig& config, std::string_view key, std::string_view value);

/// Canonical text form; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const SimConfig& config);

/// Every recognised key, in canonical order.
const std::vector<std::string>& config_keys();

/// Keys that accept numeric values (usable as sweep axes), plus
/// scheduler.mode, which sweeps over mode names.
const std::vector<std::string>& sweep_axes();

/// Applies SORTEDRL_OUTPUT_DIR if it is set and non-empty.
void apply_environment(SimConfig& config);

}  // namespace sortedrl
