// SPDX-License-Identifier: Apache-2.0
// Command-line front end: run, sweep and report.
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sortedrl/sortedrl.h"

namespace {

int report_failure(const char* what, srl_status status) {
  std::fprintf(stderr, "sortedrl: %s: %s (%s)\n", what, srl_last_error(), srl_status_name(status));
  return status == SRL_PARSE_ERROR || status == SRL_INVALID_ARGUMENT ? 2 : 1;
}

struct ConfigGuard {
  srl_config* ptr = nullptr;
  ~ConfigGuard() { srl_config_free(ptr); }
};

/// Loads the config and layers overrides: file < SORTEDRL_OUTPUT_DIR < flags.
int load(const std::string& path, const std::optional<std::string>& output_dir,
         const std::optional<bool>& trace, ConfigGuard& cfg) {
  if (auto s = srl_config_load(path.c_str(), &cfg.ptr); s != SRL_OK)
    return report_failure("config", s);
  if (auto s = srl_config_apply_environment(cfg.ptr); s != SRL_OK) return report_failure("config", s);
  if (output_dir)
    if (auto s = srl_config_set(cfg.ptr, "output.dir", output_dir->c_str()); s != SRL_OK)
      return report_failure("--output-dir", s);
  if (trace)
    if (auto s = srl_config_set(cfg.ptr, "output.trace", *trace ? "true" : "false"); s != SRL_OK)
      return report_failure("--trace", s);
  if (auto s = srl_config_validate(cfg.ptr); s != SRL_OK) return report_failure("config", s);
  return 0;
}

std::string output_dir_of(const srl_config* cfg) {
  char* text = nullptr;
  std::string dir;
  if (srl_config_to_text(cfg, &text) == SRL_OK) {
    const std::string all = text;
    const std::string key = "output.dir = ";
    if (auto p = all.find(key); p != std::string::npos)
      dir = all.substr(p + key.size(), all.find('\n', p) - p - key.size());
  }
  srl_string_free(text);
  return dir;
}

int print_report(const std::vector<std::string>& dirs) {
  std::vector<const char*> ptrs;
  for (const auto& d : dirs) ptrs.push_back(d.c_str());
  char* text = nullptr;
  if (auto s = srl_report(ptrs.data(), ptrs.size(), &text); s != SRL_OK)
    return report_failure("report", s);
  std::fputs(text, stdout);
  srl_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for sorted RL rollout scheduling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srl_version()));

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<bool> trace;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run one simulation and write its artifacts");
  run->add_option("-c,--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output-dir", output_dir, "Artifact directory (overrides output.dir)");
  run->add_flag("--trace,!--no-trace", trace, "Write the step-level event trace");
  run->add_flag("-q,--quiet", quiet, "Do not print the summary table");

  std::string axis;
  std::vector<std::string> values;
  int parallelism = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run one simulation per value of a config field");
  sweep->add_option("-c,--config", config_path, "Base config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("-a,--axis", axis, "Dotted config key to vary")->required();
  sweep->add_option("-v,--values", values, "Values (comma separated or repeated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("-o,--output-dir", output_dir, "Root directory for the sweep");
  sweep->add_flag("--trace,!--no-trace", trace, "Write event traces for every point");
  sweep->add_option("-j,--parallel", parallelism, "Concurrent sweep points")->check(CLI::PositiveNumber);
  sweep->add_flag("-q,--quiet", quiet, "Do not print the sweep table");

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "Render tables from stored run or sweep artifacts");
  report->add_option("dirs", report_dirs, "Run or sweep directories")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    ConfigGuard cfg;
    if (int rc = load(config_path, output_dir, trace, cfg)) return rc;
    if (auto s = srl_run_write(cfg.ptr, nullptr); s != SRL_OK) return report_failure("run", s);
    return quiet ? 0 : print_report({output_dir_of(cfg.ptr)});
  }
  if (*sweep) {
    ConfigGuard cfg;
    if (int rc = load(config_path, output_dir, trace, cfg)) return rc;
    std::vector<const char*> ptrs;
    for (const auto& v : values) ptrs.push_back(v.c_str());
    if (auto s = srl_sweep(cfg.ptr, axis.c_str(), ptrs.data(), ptrs.size(), parallelism); s != SRL_OK)
      return report_failure("sweep", s);
    return quiet ? 0 : print_report({output_dir_of(cfg.ptr)});
  }
  return print_report(report_dirs);
}
