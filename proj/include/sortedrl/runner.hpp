// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sortedrl/config.hpp"
#include "sortedrl/metrics.hpp"

namespace sortedrl {

namespace fs = std::filesystem;

/// Artifact file names inside a run directory.
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kUpdatesFile = "updates.csv";
inline constexpr const char* kIterationsFile = "iterations.csv";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kTraceFile = "trace.jsonl";
inline constexpr const char* kSweepFile = "sweep.csv";

std::string updates_csv(const RunReport& report);
std::string iterations_csv(const RunReport& report);
std::string summary_csv(const RunReport& report);
std::string report_json(const RunReport& report, const SimConfig& config);
std::string trace_line(const EngineEvent& event);

/// Headline numbers derived from a finished run, shared by report.json and
/// sweep tables.
struct RunDigest {
  double bubble_ratio = 0.0;
  double throughput = 0.0;
  double goodput = 0.0;
  int64_t updates = 0;
  int64_t max_staleness = 0;
  double curriculum_ratio = 1.0;
  double skew_statistic = 0.0;  // NaN when too few trajectories were delivered
  double skew_critical = 0.0;
};

RunDigest digest(const RunReport& report, const SimConfig& config);

/// Runs one simulation and writes its artifacts into config.output_dir.
/// Files are staged under temporary names and renamed once everything has
/// been written; on failure no artifact of this run is left behind.
RunReport run_to_directory(const SimConfig& config);

/// Runs a simulation in memory only.
RunReport run_in_memory(const SimConfig& config);

/// Per-point seed: mixes the base seed with the axis name and value text.
uint64_t derive_seed(uint64_t base_seed, std::string_view axis, std::string_view value);

struct SweepPoint {
  std::string value;
  SimConfig config;
  RunDigest digest;
};

/// One run per value under `<output_dir>/<axis>=<value>/`, executed on up to
/// `parallelism` threads, then a combined sweep.csv in output_dir. Points
/// get derived seeds, except on the scheduler.mode axis, where every mode
/// shares the base seed so they see the same hidden lengths.
std::vector<SweepPoint> run_sweep(const SimConfig& base, std::string_view axis,
                                  const std::vector<std::string>& values, int parallelism);

/// Re-reads the artifacts of one or more run or sweep directories and renders
/// plain-text tables. Throws Error(parse) if an artifact is malformed.
std::string render_report(const std::vector<fs::path>& dirs);

}  // namespace sortedrl
