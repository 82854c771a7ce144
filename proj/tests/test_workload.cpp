#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sortedrl/error.hpp"
#include "sortedrl/workload.hpp"

using namespace sortedrl;

namespace {

// Normal CDF via std::erfc: independent of the quantile path under test.
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(L <= x) for the clamped log-normal body mixed with the cap atom.
double model_cdf(const LengthModel& m, double x) {
  if (x >= static_cast<double>(m.cap)) return 1.0;
  const double body = normal_cdf((std::log(x + 0.5) - std::log(m.median)) / m.sigma);
  return (1.0 - m.tail_mass) * body;
}

}  // namespace

TEST_CASE("default length model matches its analytic quantiles") {
  const LengthModel m = LengthModel::calibrated_default();
  UniformStream rng(11);
  const int n = 200000;
  int le3000 = 0, at_cap = 0, le1000 = 0;
  for (int i = 0; i < n; ++i) {
    const int64_t len = sample_length(m, rng);
    REQUIRE(len >= m.floor);
    REQUIRE(len <= m.cap);
    le3000 += len <= 3000;
    le1000 += len <= 1000;
    at_cap += len == m.cap;
  }
  const double p3000 = static_cast<double>(le3000) / n;
  const double p1000 = static_cast<double>(le1000) / n;
  const double pcap = static_cast<double>(at_cap) / n;
  // 4-sigma binomial bands around the analytic values.
  auto band = [n](double p) { return 4.0 * std::sqrt(p * (1 - p) / n); };
  CHECK(std::abs(p3000 - model_cdf(m, 3000)) < band(p3000));
  CHECK(std::abs(p1000 - model_cdf(m, 1000)) < band(p1000));
  const double cap_mass = 1.0 - model_cdf(m, static_cast<double>(m.cap) - 1);
  CHECK(std::abs(pcap - cap_mass) < band(cap_mass));
  CHECK(p3000 > 0.80);
  CHECK(p3000 < 0.90);
  CHECK(pcap > 0.05);
}

TEST_CASE("sampled length is monotone in the cap for a fixed draw") {
  LengthModel m = LengthModel::calibrated_default();
  UniformStream rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.next();
    int64_t prev = 0;
    for (int64_t cap : {512, 1024, 2048, 4096, 8192, 16384}) {
      m.cap = cap;
      const int64_t len = length_from_uniform(m, u);
      CHECK(len >= prev);
      CHECK(len <= cap);
      prev = len;
    }
  }
}

TEST_CASE("uniform stream stays inside the open unit interval") {
  UniformStream rng(0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("constant model and zero sigma give a fixed body") {
  const LengthModel c = LengthModel::constant(300, 4096);
  UniformStream rng(3);
  for (int i = 0; i < 100; ++i) CHECK(sample_length(c, rng) == 300);
  CHECK(length_from_uniform(c, 1e-12) == 300);
  CHECK(length_from_uniform(c, 1 - 1e-12) == 300);
}

TEST_CASE("the lowest tail_mass of the uniform range is the cap atom") {
  const LengthModel m = LengthModel::calibrated_default();
  CHECK(length_from_uniform(m, 0.5 * m.tail_mass) == m.cap);
  CHECK(length_from_uniform(m, 0.5) < m.cap);
  const double body_median = m.tail_mass + 0.5 * (1.0 - m.tail_mass);
  CHECK(length_from_uniform(m, body_median) == static_cast<int64_t>(std::llround(m.median)));
}

TEST_CASE("length model validation names the field") {
  auto expect = [](LengthModel m, const char* field) {
    try {
      m.validate();
      FAIL("expected a validation error for " << field);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  LengthModel m;
  m.median = 0;
  expect(m, "workload.median");
  m = {};
  m.sigma = -1;
  expect(m, "workload.sigma");
  m = {};
  m.tail_mass = 1.5;
  expect(m, "workload.tail_mass");
  m = {};
  m.cap = 0;
  expect(m, "workload.cap");
  m = {};
  m.floor = 5000;
  expect(m, "workload.floor");
}

TEST_CASE("drift scales lengths per policy version and re-clamps") {
  const LengthModel m = LengthModel::calibrated_default();
  CHECK(drifted_length(m, 1000, 1.0, 7) == 1000);
  CHECK(drifted_length(m, 1000, 1.1, 0) == 1000);
  CHECK(drifted_length(m, 1000, 1.1, 2) == 1210);
  CHECK(drifted_length(m, 4000, 2.0, 1) == m.cap);
  CHECK(drifted_length(m, 10, 0.01, 3) == m.floor);
}

TEST_CASE("prompt stream is prompt-major and deterministic") {
  WorkloadConfig cfg;
  cfg.prompt_count = 10;
  cfg.samples_per_prompt = 3;
  const auto a = build_prompt_stream(cfg, 4, 99);
  const auto b = build_prompt_stream(cfg, 4, 99);
  REQUIRE(a.size() == 10);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].prompt_id == static_cast<int64_t>(i));
    CHECK(a[i].group_epoch == static_cast<int64_t>(i / 4));
    CHECK(a[i].intrinsic_lengths == b[i].intrinsic_lengths);
    CHECK(a[i].intrinsic_lengths.size() == 3);
  }
  // Prompt-major: the first prompt's samples are the first three draws.
  UniformStream rng(99);
  for (int s = 0; s < 3; ++s) CHECK(a[0].intrinsic_lengths[s] == sample_length(cfg.model, rng));
  const auto c = build_prompt_stream(cfg, 4, 100);
  CHECK(c[0].intrinsic_lengths != a[0].intrinsic_lengths);
}

TEST_CASE("workload config validation") {
  WorkloadConfig cfg;
  cfg.prompt_count = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.prompt_count = 0;
  CHECK_NOTHROW(cfg.validate());
  cfg = {};
  cfg.samples_per_prompt = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.length_drift = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
