// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/config.hpp"

#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "sortedrl/error.hpp"

namespace sortedrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end || text.empty())
    fail(ErrorCode::parse, std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  fail(ErrorCode::parse, std::string(key) + ": expected true/false, got '" + std::string(text) + "'");
}

struct Field {
  std::string key;
  bool numeric;
  std::function<void(SimConfig&, std::string_view)> set;
  std::function<std::string(const SimConfig&)> get;
};

template <typename Ref>
Field integer(std::string key, Ref ref) {
  return {key, true,
          [ref, key](SimConfig& c, std::string_view v) { ref(c) = parse_number<int64_t>(key, v); },
          [ref](const SimConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Ref>
Field small_integer(std::string key, Ref ref) {
  return {key, true,
          [ref, key](SimConfig& c, std::string_view v) {
            const auto n = parse_number<int64_t>(key, v);
            if (n < INT_MIN || n > INT_MAX)
              fail(ErrorCode::parse, key + ": value out of range");
            ref(c) = static_cast<int>(n);
          },
          [ref](const SimConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Ref>
Field real(std::string key, Ref ref) {
  return {key, true,
          [ref, key](SimConfig& c, std::string_view v) { ref(c) = parse_number<double>(key, v); },
          [ref](const SimConfig& c) { return format_double(ref(c)); }};
}

template <typename Ref>
Field boolean(std::string key, Ref ref) {
  return {key, false,
          [ref, key](SimConfig& c, std::string_view v) { ref(c) = parse_bool(key, v); },
          [ref](const SimConfig& c) {
            return std::string(ref(c) ? "true" : "false");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed", true,
                 [](SimConfig& c, std::string_view v) { c.seed = parse_number<uint64_t>("seed", v); },
                 [](const SimConfig& c) { return std::to_string(c.seed); }});
    f.push_back(integer("workload.prompts", [](auto& c) -> auto& { return c.workload.prompt_count; }));
    f.push_back(small_integer("workload.samples_per_prompt",
                              [](auto& c) -> auto& { return c.workload.samples_per_prompt; }));
    f.push_back(real("workload.median", [](auto& c) -> auto& { return c.workload.model.median; }));
    f.push_back(real("workload.sigma", [](auto& c) -> auto& { return c.workload.model.sigma; }));
    f.push_back(real("workload.tail_mass", [](auto& c) -> auto& { return c.workload.model.tail_mass; }));
    f.push_back(integer("workload.cap", [](auto& c) -> auto& { return c.workload.model.cap; }));
    f.push_back(integer("workload.floor", [](auto& c) -> auto& { return c.workload.model.floor; }));
    f.push_back(real("workload.length_drift", [](auto& c) -> auto& { return c.workload.length_drift; }));
    f.push_back(integer("engine.capacity", [](auto& c) -> auto& { return c.engine.capacity; }));
    f.push_back(integer("engine.cap", [](auto& c) -> auto& { return c.engine.max_tokens; }));
    f.push_back(real("engine.step_base", [](auto& c) -> auto& { return c.engine.cost.base; }));
    f.push_back(real("engine.step_per_active", [](auto& c) -> auto& { return c.engine.cost.per_active; }));
    f.push_back({"scheduler.mode", false,
                 [](SimConfig& c, std::string_view v) {
                   auto m = parse_mode(v);
                   if (!m)
                     fail(ErrorCode::parse,
                          "scheduler.mode: expected one of baseline_sync, sorted_on_policy, "
                          "sorted_partial, no_grouping, post_hoc_sort; got '" + std::string(v) + "'");
                   c.scheduler.mode = *m;
                 },
                 [](const SimConfig& c) { return std::string(to_string(c.scheduler.mode)); }});
    f.push_back(integer("scheduler.rollout_batch", [](auto& c) -> auto& { return c.scheduler.rollout_batch; }));
    f.push_back(integer("scheduler.group_size", [](auto& c) -> auto& { return c.scheduler.group_size; }));
    f.push_back(integer("scheduler.update_batch", [](auto& c) -> auto& { return c.scheduler.update_batch_size; }));
    f.push_back(integer("scheduler.ready_target", [](auto& c) -> auto& { return c.scheduler.early_term.ready_target; }));
    f.push_back(real("scheduler.min_util", [](auto& c) -> auto& { return c.scheduler.early_term.min_util; }));
    f.push_back(integer("scheduler.max_updates", [](auto& c) -> auto& { return c.scheduler.max_updates; }));
    f.push_back(real("learner.eps_low", [](auto& c) -> auto& { return c.learner.eps_low; }));
    f.push_back(real("learner.eps_high", [](auto& c) -> auto& { return c.learner.eps_high; }));
    f.push_back(real("learner.gamma", [](auto& c) -> auto& { return c.learner.gamma; }));
    f.push_back(real("learner.lambda", [](auto& c) -> auto& { return c.learner.lambda; }));
    f.push_back({"learner.advantage", false,
                 [](SimConfig& c, std::string_view v) {
                   if (v == "reinforce_pp") c.advantage = AdvantageKind::reinforce_pp;
                   else if (v == "gae") c.advantage = AdvantageKind::gae;
                   else
                     fail(ErrorCode::parse, "learner.advantage: expected reinforce_pp or gae; got '" +
                                                std::string(v) + "'");
                 },
                 [](const SimConfig& c) { return std::string(to_string(c.advantage)); }});
    f.push_back(real("learner.update_cost", [](auto& c) -> auto& { return c.update_cost; }));
    f.push_back(boolean("metrics.include_update_time", [](auto& c) -> auto& { return c.include_update_time; }));
    f.push_back({"output.dir", false,
                 [](SimConfig& c, std::string_view v) { c.output_dir = std::string(v); },
                 [](const SimConfig& c) { return c.output_dir; }});
    f.push_back(boolean("output.trace", [](auto& c) -> auto& { return c.trace; }));
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

void SimConfig::validate() const {
  workload.validate();
  engine.validate();
  SchedulerConfig sched = scheduler;
  sched.samples_per_prompt = workload.samples_per_prompt;
  sched.validate();
  learner.validate();
  if (advantage == AdvantageKind::reinforce_pp && scheduler.update_batch_size < 2)
    fail(ErrorCode::invalid_argument,
         "scheduler.update_batch: reinforce_pp needs at least 2 trajectories per batch");
  if (!(update_cost >= 0.0) || !std::isfinite(update_cost))
    fail(ErrorCode::invalid_argument, "learner.update_cost: must be finite and >= 0");
  if (output_dir.empty()) fail(ErrorCode::invalid_argument, "output.dir: must not be empty");
}

void set_config_value(SimConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) fail(ErrorCode::parse, "unknown key '" + std::string(key) + "'");
  f->set(config, trim(value));
}

SimConfig parse_config(std::string_view text, std::string_view origin) {
  SimConfig config;
  std::string section;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        fail(ErrorCode::parse, where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::parse, where + "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) fail(ErrorCode::parse, where + "missing key");
    if (!section.empty()) key = section + "." + key;
    try {
      set_config_value(config, key, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::parse, where + e.what());
    }
  }
  config.scheduler.samples_per_prompt = config.workload.samples_per_prompt;
  config.validate();
  return config;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_text(const SimConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = [] {
    std::vector<std::string> k;
    for (const auto& f : fields())
      if (f.numeric || f.key == "scheduler.mode") k.push_back(f.key);
    return k;
  }();
  return axes;
}

void apply_environment(SimConfig& config) {
  if (const char* dir = std::getenv("SORTEDRL_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;
}

}  // namespace sortedrl
