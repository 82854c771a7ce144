// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "sortedrl/error.hpp"

namespace sortedrl {

double bubble_ratio(const StepTrace& trace, int64_t capacity) {
  if (capacity <= 0) fail(ErrorCode::invalid_argument, "bubble_ratio: capacity must be positive");
  if (trace.empty()) fail(ErrorCode::invalid_argument, "bubble_ratio: empty trace");
  double idle = 0.0;
  double total = 0.0;
  for (const auto& rec : trace.records) {
    if (rec.active < 0 || rec.active > capacity)
      fail(ErrorCode::invalid_argument, "bubble_ratio: active count " +
                                            std::to_string(rec.active) + " outside [0, Q]");
    idle += static_cast<double>(capacity - rec.active) * rec.duration;
    total += rec.duration;
  }
  if (!(total > 0.0)) fail(ErrorCode::invalid_argument, "bubble_ratio: zero-duration trace");
  return idle / (total * static_cast<double>(capacity));
}

double throughput(const StepTrace& trace, int64_t total_tokens) {
  if (!(trace.total_time > 0.0))
    fail(ErrorCode::invalid_argument, "throughput: zero-duration trace");
  return static_cast<double>(total_tokens) / trace.total_time;
}

double ks_statistic(std::span<const int64_t> a, std::span<const int64_t> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::invalid_argument, "ks_statistic: empty sample");
  std::vector<int64_t> x(a.begin(), a.end());
  std::vector<int64_t> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const int64_t v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical_value(size_t n, size_t m, double alpha) {
  if (n == 0 || m == 0) fail(ErrorCode::invalid_argument, "ks_critical_value: empty sample");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const auto dn = static_cast<double>(n);
  const auto dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

SkewResult length_skew(std::span<const int64_t> harvested, const LengthModel& reference,
                       uint64_t seed, size_t reference_size) {
  if (harvested.size() < 100)
    fail(ErrorCode::invalid_argument, "length_skew: need at least 100 samples, got " +
                                          std::to_string(harvested.size()));
  reference.validate();
  UniformStream rng(seed);
  std::vector<int64_t> ref(reference_size);
  for (auto& v : ref) v = sample_length(reference, rng);
  SkewResult r;
  r.statistic = ks_statistic(harvested, ref);
  r.critical_value = ks_critical_value(harvested.size(), ref.size());
  r.samples = harvested.size();
  r.reference_samples = ref.size();
  return r;
}

CurriculumProfile curriculum_profile(const RunReport& report) {
  CurriculumProfile profile;
  std::map<int64_t, std::vector<double>> by_group;
  for (const auto& u : report.updates) {
    profile.points.push_back({u.group_epoch, u.index_in_group, u.mean_length});
    by_group[u.group_epoch].push_back(u.mean_length);
  }
  double ratio_sum = 0.0;
  for (const auto& [epoch, means] : by_group) {
    GroupCurriculum g;
    g.group_epoch = epoch;
    g.steps = static_cast<int64_t>(means.size());
    g.first_mean = means.front();
    g.last_mean = means.back();
    g.ratio = g.first_mean > 0.0 ? g.last_mean / g.first_mean : 1.0;
    if (means.size() > 1) {
      size_t rising = 0;
      for (size_t i = 1; i < means.size(); ++i)
        if (means[i] >= means[i - 1]) ++rising;
      g.monotone_fraction = static_cast<double>(rising) / static_cast<double>(means.size() - 1);
    }
    ratio_sum += g.ratio;
    profile.groups.push_back(g);
  }
  if (!profile.groups.empty())
    profile.mean_ratio = ratio_sum / static_cast<double>(profile.groups.size());
  return profile;
}

}  // namespace sortedrl
