// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sortedrl/error.hpp"
#include "sortedrl/simulation.hpp"

namespace sortedrl {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(int64_t v) { return std::to_string(v); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) fail(ErrorCode::io, "write to '" + path.string() + "' failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path staging_name(const fs::path& dir, const char* name) {
  return dir / (std::string(".") + name + ".tmp");
}

}  // namespace

std::string updates_csv(const RunReport& report) {
  std::string out = "step,version,mean_len,staleness_p50,staleness_max,objective\n";
  for (const auto& u : report.updates)
    out += num(u.step) + "," + num(u.version) + "," + num(u.mean_length) + "," +
           num(u.staleness.p50) + "," + num(u.staleness.max) + "," + num(u.objective) + "\n";
  return out;
}

std::string iterations_csv(const RunReport& report) {
  std::string out = "iteration,harvested,scavenged,clock\n";
  for (const auto& it : report.iterations)
    out += num(it.iteration) + "," + num(it.harvested) + "," + num(it.scavenged) + "," +
           num(it.clock) + "\n";
  return out;
}

std::string summary_csv(const RunReport& report) {
  return "bubble_ratio,throughput\n" + num(report.bubble_ratio) + "," + num(report.throughput) +
         "\n";
}

std::string trace_line(const EngineEvent& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"t\":%.17g,\"event_kind\":\"%s\",\"request_id\":%lld,\"active_count\":%lld,"
                "\"policy_version\":%lld}\n",
                e.t, std::string(to_string(e.kind)).c_str(), static_cast<long long>(e.request_id),
                static_cast<long long>(e.active_count), static_cast<long long>(e.policy_version));
  return buf;
}

RunDigest digest(const RunReport& report, const SimConfig& config) {
  RunDigest d;
  d.bubble_ratio = report.bubble_ratio;
  d.throughput = report.throughput;
  d.goodput = report.goodput;
  d.updates = static_cast<int64_t>(report.updates.size());
  for (const auto& u : report.updates) d.max_staleness = std::max(d.max_staleness, u.staleness.max);
  d.curriculum_ratio = curriculum_profile(report).mean_ratio;
  d.skew_statistic = std::numeric_limits<double>::quiet_NaN();
  d.skew_critical = std::numeric_limits<double>::quiet_NaN();
  if (report.delivered_lengths.size() >= 100) {
    LengthModel reference = config.workload.model;
    reference.cap = std::min(reference.cap, config.engine.max_tokens);
    reference.floor = std::min(reference.floor, reference.cap);
    const SkewResult skew = length_skew(report.delivered_lengths, reference);
    d.skew_statistic = skew.statistic;
    d.skew_critical = skew.critical_value;
  }
  return d;
}

std::string report_json(const RunReport& report, const SimConfig& config) {
  const RunDigest d = digest(report, config);
  const CurriculumProfile curriculum = curriculum_profile(report);

  json cfg = json::object();
  std::istringstream lines(to_text(config));
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find(" = ");
    cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }

  json groups = json::array();
  for (const auto& g : curriculum.groups)
    groups.push_back({{"group_epoch", g.group_epoch},
                      {"steps", g.steps},
                      {"first_mean", g.first_mean},
                      {"last_mean", g.last_mean},
                      {"ratio", g.ratio},
                      {"monotone_fraction", g.monotone_fraction}});

  std::map<int64_t, int64_t> staleness;
  for (const auto& u : report.updates)
    for (const auto& [s, n] : u.staleness.histogram) staleness[s] += n;
  json hist = json::object();
  for (const auto& [s, n] : staleness) hist[std::to_string(s)] = n;

  json skew = nullptr;
  if (!std::isnan(d.skew_statistic))
    skew = {{"statistic", d.skew_statistic},
            {"critical_value", d.skew_critical},
            {"samples", report.delivered_lengths.size()},
            {"biased", d.skew_statistic > d.skew_critical}};

  json out = {
      {"mode", report.mode},
      {"seed", report.seed},
      {"capacity", report.capacity},
      {"step_cost", {{"base", report.step_cost.base}, {"per_active", report.step_cost.per_active}}},
      {"config", std::move(cfg)},
      {"metrics",
       {{"bubble_ratio", report.bubble_ratio},
        {"end_to_end_bubble_ratio", report.end_to_end_bubble_ratio},
        {"throughput", report.throughput},
        {"goodput", report.goodput},
        {"total_time", report.total_time},
        {"update_time", report.update_time},
        {"steps", report.trace.records.size()}}},
      {"tokens",
       {{"emitted", report.emitted_tokens},
        {"harvested", report.harvested_tokens},
        {"delivered", report.delivered_tokens},
        {"buffered", report.buffered_tokens},
        {"discarded", report.discarded_tokens}}},
      {"trajectories",
       {{"delivered", report.delivered_trajectories},
        {"dropped", report.dropped_trajectories},
        {"unconsumed", report.unconsumed_trajectories}}},
      {"groups", {{"loaded", report.groups_loaded}, {"partial_final_group", report.partial_final_group}}},
      {"iterations", report.iterations.size()},
      {"updates", report.updates.size()},
      {"staleness", {{"max", d.max_staleness}, {"histogram", std::move(hist)}}},
      {"curriculum", {{"mean_ratio", curriculum.mean_ratio}, {"groups", std::move(groups)}}},
      {"length_skew", std::move(skew)},
  };
  return out.dump(2) + "\n";
}

RunReport run_in_memory(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

RunReport run_to_directory(const SimConfig& config) {
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir.string() + "': " + ec.message());

  const std::vector<const char*> names = {kReportFile, kUpdatesFile, kIterationsFile, kSummaryFile,
                                          kTraceFile};
  std::vector<fs::path> committed;
  auto cleanup = [&] {
    std::error_code ignore;
    for (const char* n : names) fs::remove(staging_name(dir, n), ignore);
    for (const auto& p : committed) fs::remove(p, ignore);
  };

  try {
    SimulationHooks hooks;
    std::ofstream trace_out;
    if (config.trace) {
      trace_out.open(staging_name(dir, kTraceFile), std::ios::binary | std::ios::trunc);
      if (!trace_out) fail(ErrorCode::io, "cannot open trace file in '" + dir.string() + "'");
      hooks.on_event = [&trace_out](const EngineEvent& e) { trace_out << trace_line(e); };
    }
    Simulation sim(config, std::move(hooks));
    RunReport report = sim.run();
    if (config.trace) {
      trace_out.close();
      if (!trace_out) fail(ErrorCode::io, "writing the trace failed");
    }

    write_file(staging_name(dir, kReportFile), report_json(report, config));
    write_file(staging_name(dir, kUpdatesFile), updates_csv(report));
    write_file(staging_name(dir, kIterationsFile), iterations_csv(report));
    write_file(staging_name(dir, kSummaryFile), summary_csv(report));

    for (const char* n : names) {
      const fs::path final_path = dir / n;
      if (n == std::string_view(kTraceFile) && !config.trace) {
        fs::remove(final_path, ec);  // a stale trace from an earlier run would mislead
        continue;
      }
      fs::rename(staging_name(dir, n), final_path);
      committed.push_back(final_path);
    }
    return report;
  } catch (const Error&) {
    cleanup();
    throw;
  } catch (const fs::filesystem_error& e) {
    cleanup();
    fail(ErrorCode::io, e.what());
  }
}

uint64_t derive_seed(uint64_t base_seed, std::string_view axis, std::string_view value) {
  // FNV-1a over "axis=value", folded into the base with a splitmix64 finalizer.
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_in = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix_in(axis);
  mix_in("=");
  mix_in(value);
  uint64_t z = base_seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<SweepPoint> run_sweep(const SimConfig& base, std::string_view axis,
                                  const std::vector<std::string>& values, int parallelism) {
  const auto& axes = sweep_axes();
  if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
    std::string list;
    for (const auto& a : axes) list += (list.empty() ? "" : ", ") + a;
    fail(ErrorCode::invalid_argument,
         "unknown sweep axis '" + std::string(axis) + "'; valid axes: " + list);
  }
  if (values.empty()) fail(ErrorCode::invalid_argument, "sweep needs at least one value");

  std::vector<SweepPoint> points;
  for (const auto& v : values) {
    for (const auto& p : points)
      if (p.value == v) fail(ErrorCode::invalid_argument, "duplicate sweep value '" + v + "'");
    SweepPoint p;
    p.value = v;
    p.config = base;
    try {
      set_config_value(p.config, axis, v);
      p.config.scheduler.samples_per_prompt = p.config.workload.samples_per_prompt;
      p.config.validate();
    } catch (const Error& e) {
      fail(ErrorCode::invalid_argument,
           "sweep point " + std::string(axis) + "=" + v + ": " + e.what());
    }
    if (axis != "scheduler.mode" && axis != "seed") p.config.seed = derive_seed(base.seed, axis, v);
    p.config.output_dir = (fs::path(base.output_dir) / (std::string(axis) + "=" + v)).string();
    points.push_back(std::move(p));
  }

  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  size_t first_error_index = points.size();
  auto worker = [&] {
    for (size_t i = next++; i < points.size(); i = next++) {
      try {
        const RunReport report = run_to_directory(points[i].config);
        points[i].digest = digest(report, points[i].config);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  const int threads = std::clamp(parallelism, 1, static_cast<int>(points.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string csv =
      "axis,value,seed,bubble_ratio,throughput,goodput,updates,max_staleness,curriculum_ratio,"
      "skew_statistic,skew_critical\n";
  for (const auto& p : points) {
    const RunDigest& d = p.digest;
    csv += std::string(axis) + "," + p.value + "," + std::to_string(p.config.seed) + "," +
           num(d.bubble_ratio) + "," + num(d.throughput) + "," + num(d.goodput) + "," +
           num(d.updates) + "," + num(d.max_staleness) + "," + num(d.curriculum_ratio) + "," +
           num(d.skew_statistic) + "," + num(d.skew_critical) + "\n";
  }
  const fs::path dir = base.output_dir;
  const fs::path staged = staging_name(dir, kSweepFile);
  write_file(staged, csv);
  std::error_code ec;
  fs::rename(staged, dir / kSweepFile, ec);
  if (ec) fail(ErrorCode::io, "cannot finalize sweep table: " + ec.message());
  return points;
}

// ---- report rendering ------------------------------------------------------

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Parses a CSV artifact and checks its header; columns listed in
/// `text_columns` may hold non-numeric values.
Table read_csv(const fs::path& path, const std::vector<std::string>& expected_header,
               const std::vector<size_t>& text_columns = {}) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, path.string() + ": empty file");
  t.header = split_csv_line(line);
  if (t.header != expected_header)
    fail(ErrorCode::parse, path.string() + ": unexpected header '" + line + "'");
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != t.header.size())
      fail(ErrorCode::parse, where + "expected " + std::to_string(t.header.size()) + " fields");
    for (size_t c = 0; c < cells.size(); ++c)
      if (std::find(text_columns.begin(), text_columns.end(), c) == text_columns.end() &&
          !is_number(cells[c]))
        fail(ErrorCode::parse, where + "field '" + t.header[c] + "' is not numeric");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string render(const Table& t) {
  std::vector<size_t> width(t.header.size(), 0);
  for (size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& r : t.rows)
    for (size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream out;
  auto row = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c)
      out << (c ? "  " : "") << std::setw(static_cast<int>(width[c]))
          << (c == 0 ? std::left : std::right) << cells[c];
    out << "\n";
  };
  row(t.header);
  std::vector<std::string> rule;
  for (size_t w : width) rule.push_back(std::string(w, '-'));
  row(rule);
  for (const auto& r : t.rows) row(r);
  return out.str();
}

const std::vector<std::string> kUpdatesHeader = {"step", "version", "mean_len", "staleness_p50",
                                                 "staleness_max", "objective"};
const std::vector<std::string> kIterationsHeader = {"iteration", "harvested", "scavenged", "clock"};
const std::vector<std::string> kSummaryHeader = {"bubble_ratio", "throughput"};
const std::vector<std::string> kSweepHeader = {
    "axis", "value", "seed", "bubble_ratio", "throughput", "goodput", "updates", "max_staleness",
    "curriculum_ratio", "skew_statistic", "skew_critical"};

double cell(const Table& t, size_t row, size_t col) { return std::strtod(t.rows[row][col].c_str(), nullptr); }

std::string render_sweep(const fs::path& dir) {
  const Table t = read_csv(dir / kSweepFile, kSweepHeader, {0, 1});
  Table out;
  out.header = {t.rows.empty() ? "value" : t.rows.front()[0], "bubble", "throughput", "goodput",
                "updates", "max_stale", "curriculum", "skew", "skew_crit"};
  for (size_t r = 0; r < t.rows.size(); ++r)
    out.rows.push_back({t.rows[r][1], fixed(cell(t, r, 3), 4), fixed(cell(t, r, 4), 2),
                        fixed(cell(t, r, 5), 2), t.rows[r][6], t.rows[r][7],
                        fixed(cell(t, r, 8), 3), fixed(cell(t, r, 9), 4), fixed(cell(t, r, 10), 4)});
  return "sweep " + dir.string() + "\n" + render(out);
}

}  // namespace

std::string render_report(const std::vector<fs::path>& dirs) {
  if (dirs.empty()) fail(ErrorCode::invalid_argument, "report needs at least one directory");
  std::string out;
  Table runs;
  runs.header = {"run", "mode", "bubble", "throughput", "goodput", "updates", "iterations",
                 "max_stale", "curriculum", "time"};
  const fs::path* single = nullptr;
  for (const auto& dir : dirs) {
    if (fs::exists(dir / kSweepFile)) {
      out += render_sweep(dir) + "\n";
      continue;
    }
    const Table summary = read_csv(dir / kSummaryFile, kSummaryHeader);
    if (summary.rows.size() != 1)
      fail(ErrorCode::parse, (dir / kSummaryFile).string() + ": expected exactly one row");
    const Table updates = read_csv(dir / kUpdatesFile, kUpdatesHeader);
    const Table iterations = read_csv(dir / kIterationsFile, kIterationsHeader);
    json report;
    try {
      report = json::parse(read_file(dir / kReportFile));
    } catch (const json::exception& e) {
      fail(ErrorCode::parse, (dir / kReportFile).string() + ": " + e.what());
    }
    try {
      int64_t max_stale = 0;
      for (size_t r = 0; r < updates.rows.size(); ++r)
        max_stale = std::max(max_stale, static_cast<int64_t>(cell(updates, r, 4)));
      runs.rows.push_back({dir.filename().string(), report.at("mode").get<std::string>(),
                           fixed(cell(summary, 0, 0), 4), fixed(cell(summary, 0, 1), 2),
                           fixed(report.at("metrics").at("goodput").get<double>(), 2),
                           std::to_string(updates.rows.size()),
                           std::to_string(iterations.rows.size()), std::to_string(max_stale),
                           fixed(report.at("curriculum").at("mean_ratio").get<double>(), 3),
                           fixed(report.at("metrics").at("total_time").get<double>(), 1)});
    } catch (const json::exception& e) {
      fail(ErrorCode::parse, (dir / kReportFile).string() + ": " + e.what());
    }
    single = &dir;
  }
  if (!runs.rows.empty()) out += render(runs);
  if (runs.rows.size() == 1 && single) {
    const Table updates = read_csv(*single / kUpdatesFile, kUpdatesHeader);
    Table u;
    u.header = {"step", "version", "mean_len", "stale_p50", "stale_max", "objective"};
    for (size_t r = 0; r < updates.rows.size(); ++r)
      u.rows.push_back({updates.rows[r][0], updates.rows[r][1], fixed(cell(updates, r, 2), 1),
                        updates.rows[r][3], updates.rows[r][4], fixed(cell(updates, r, 5), 6)});
    out += "\n" + render(u);
  }
  return out;
}

}  // namespace sortedrl
