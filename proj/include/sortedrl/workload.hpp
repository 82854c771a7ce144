// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sortedrl {

/// Generation-length distribution: a log-normal body clamped into
/// [floor, cap], plus a point mass of `tail_mass` exactly at `cap`.
///
/// Sampling is inverse-CDF over a single uniform draw, so for a fixed draw
/// the sampled length is monotone non-decreasing in `cap`.
struct LengthModel {
  double median = 1860.0;  // exp(mu) of the log-normal body
  double sigma = 0.40;     // log-space scale; 0 gives a constant body
  int64_t cap = 4096;
  double tail_mass = 0.05;
  int64_t floor = 1;

  /// Throws Error(invalid_argument) naming the offending field.
  void validate() const;

  /// Body median 1860 / sigma 0.40 / cap 4096 / 5% at cap. Puts roughly 84%
  /// of samples at or below 3000 tokens and 7% at the cap.
  static LengthModel calibrated_default();
  static LengthModel constant(int64_t tokens, int64_t cap);
};

/// Explicit uniform stream on the open interval (0, 1). The bit-to-double
/// conversion is done by hand so streams are identical across standard
/// library implementations.
class UniformStream {
 public:
  explicit UniformStream(uint64_t seed) : engine_(seed) {}

  double next() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

int64_t length_from_uniform(const LengthModel& model, double u);
int64_t sample_length(const LengthModel& model, UniformStream& rng);

/// Scales a sampled length by drift^version and re-clamps into the model's
/// range. drift == 1 is the identity.
int64_t drifted_length(const LengthModel& model, int64_t length, double drift,
                       int64_t version);

struct PromptSpec {
  int64_t prompt_id = 0;
  int64_t group_epoch = 0;
  int samples_per_prompt = 1;
  std::vector<int64_t> intrinsic_lengths;
};

struct WorkloadConfig {
  LengthModel model;
  int64_t prompt_count = 512;
  int samples_per_prompt = 1;
  double length_drift = 1.0;

  void validate() const;
};

/// Prompts are drawn prompt-major: all G lengths of prompt i before prompt
/// i+1. `prompts_per_group` only labels group_epoch (0 disables labelling).
std::vector<PromptSpec> build_prompt_stream(const WorkloadConfig& config,
                                            int64_t prompts_per_group,
                                            uint64_t seed);

}  // namespace sortedrl
