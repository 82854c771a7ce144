// SPDX-License-Identifier: Apache-2.0
#include "sortedrl/workload.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>

#include "sortedrl/error.hpp"

namespace sortedrl {
namespace {

double standard_normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

int64_t clamp_length(const LengthModel& model, double tokens) {
  if (!(tokens < static_cast<double>(model.cap))) return model.cap;
  const auto rounded = static_cast<int64_t>(std::llround(tokens));
  return std::clamp(rounded, model.floor, model.cap);
}

}  // namespace

void LengthModel::validate() const {
  if (!(median > 0.0) || !std::isfinite(median))
    fail(ErrorCode::invalid_argument, "workload.median: must be a positive finite number");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    fail(ErrorCode::invalid_argument, "workload.sigma: must be >= 0");
  if (!(tail_mass >= 0.0 && tail_mass <= 1.0))
    fail(ErrorCode::invalid_argument, "workload.tail_mass: must lie in [0, 1]");
  if (floor < 1) fail(ErrorCode::invalid_argument, "workload.floor: must be >= 1");
  if (floor > cap) fail(ErrorCode::invalid_argument, "workload.cap: must be >= workload.floor");
}

LengthModel LengthModel::calibrated_default() { return LengthModel{}; }

LengthModel LengthModel::constant(int64_t tokens, int64_t cap) {
  LengthModel m;
  m.median = static_cast<double>(tokens);
  m.sigma = 0.0;
  m.cap = cap;
  m.tail_mass = 0.0;
  m.floor = 1;
  return m;
}

int64_t length_from_uniform(const LengthModel& model, double u) {
  if (u < model.tail_mass) return model.cap;
  if (model.sigma == 0.0) return clamp_length(model, model.median);
  // Rescale the remaining mass back onto (0, 1) for the body quantile.
  double body_u = (u - model.tail_mass) / (1.0 - model.tail_mass);
  body_u = std::clamp(body_u, 0x1.0p-60, 1.0 - 0x1.0p-53);
  const double z = standard_normal_quantile(body_u);
  return clamp_length(model, model.median * std::exp(model.sigma * z));
}

int64_t sample_length(const LengthModel& model, UniformStream& rng) {
  return length_from_uniform(model, rng.next());
}

int64_t drifted_length(const LengthModel& model, int64_t length, double drift,
                       int64_t version) {
  if (drift == 1.0 || version == 0) return length;
  const double scaled =
      static_cast<double>(length) * std::pow(drift, static_cast<double>(version));
  return clamp_length(model, scaled);
}

void WorkloadConfig::validate() const {
  model.validate();
  if (prompt_count < 0) fail(ErrorCode::invalid_argument, "workload.prompts: must be >= 0");
  if (samples_per_prompt < 1)
    fail(ErrorCode::invalid_argument, "workload.samples_per_prompt: must be >= 1");
  if (!(length_drift > 0.0) || !std::isfinite(length_drift))
    fail(ErrorCode::invalid_argument, "workload.length_drift: must be positive");
}

std::vector<PromptSpec> build_prompt_stream(const WorkloadConfig& config,
                                            int64_t prompts_per_group,
                                            uint64_t seed) {
  config.validate();
  UniformStream rng(seed);
  std::vector<PromptSpec> stream;
  stream.reserve(static_cast<size_t>(config.prompt_count));
  for (int64_t i = 0; i < config.prompt_count; ++i) {
    PromptSpec spec;
    spec.prompt_id = i;
    spec.group_epoch = prompts_per_group > 0 ? i / prompts_per_group : 0;
    spec.samples_per_prompt = config.samples_per_prompt;
    spec.intrinsic_lengths.reserve(static_cast<size_t>(config.samples_per_prompt));
    for (int s = 0; s < config.samples_per_prompt; ++s)
      spec.intrinsic_lengths.push_back(sample_length(config.model, rng));
    stream.push_back(std::move(spec));
  }
  return stream;
}

}  // namespace sortedrl
