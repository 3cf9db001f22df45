// Copyright 2026 The tdao Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Decaying sequences that drive the noisy gradient-tracking iteration:
// stepsize, aggregate-tracker damping, the two attenuation sequences, the
// per-agent Laplace noise magnitudes, and the expanding projection ball for
// the gradient tracker.

#ifndef TDAO_SCHEDULES_HPP_
#define TDAO_SCHEDULES_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tdao/types.hpp"

namespace tdao {

// base / (t + 1)^exponent for t >= 0.
struct DecayProfile {
  double base = 1.0;
  double exponent = 0.0;

  double value(Iteration t) const;

  friend bool operator==(const DecayProfile&, const DecayProfile&) = default;
};

double EvalProfile(const DecayProfile& profile, Iteration t);

// Per-agent standard deviations of the two noise families. `zeta` perturbs
// the shared gradient tracker, `xi` the shared aggregate tracker. When the
// per-agent vectors are empty every agent uses the default profile.
struct NoiseSchedule {
  DecayProfile zeta{1.0, 0.5};
  DecayProfile xi{1.0, 0.5};
  std::vector<DecayProfile> zeta_per_agent;
  std::vector<DecayProfile> xi_per_agent;

  const DecayProfile& zeta_for(int agent) const;
  const DecayProfile& xi_for(int agent) const;

  bool heterogeneous() const {
    return !zeta_per_agent.empty() || !xi_per_agent.empty();
  }

  // Elementwise Laplace scale: 2 nu^2 = sigma^2, so nu = sigma / sqrt(2).
  double zeta_scale(int agent, Iteration t) const;
  double xi_scale(int agent, Iteration t) const;

  // Extremes over agents used by the privacy accounting; `agents` is only
  // needed when the schedule is heterogeneous.
  struct Extremes {
    double min_base = 0.0;
    int limiting_agent = 0;   // agent attaining min_base
    double min_exponent = 0.0;
    double max_exponent = 0.0;
  };
  Extremes zeta_extremes(int agents) const;
  Extremes xi_extremes(int agents) const;
};

struct ScheduleSet {
  DecayProfile lambda{1.0, 0.95};
  DecayProfile alpha{1.0, 0.95};
  DecayProfile gamma1{1.0, 0.1};
  DecayProfile gamma2{1.0, 0.24};
  NoiseSchedule noise;

  // Throws Error(kInvalidArgument) when any base is not strictly positive or
  // any exponent is not finite.
  void Validate() const;
};

// (1 + sum_{p<t} gamma1(p)) * lf2, computed from scratch in O(t).
double BallRadius(const DecayProfile& gamma1, double lf2, Iteration t);

// Incremental version of BallRadius used inside the run loop.
class BallRadiusTracker {
 public:
  BallRadiusTracker(DecayProfile gamma1, double lf2);

  Iteration t() const { return t_; }
  double radius() const { return (1.0 + partial_sum_) * lf2_; }
  void Advance();

 private:
  DecayProfile gamma1_;
  double lf2_;
  Iteration t_ = 0;
  double partial_sum_ = 0.0;
};

enum class NoiseTag : std::uint32_t { kZeta = 1, kXi = 2 };

// Identifies one noise draw: the vector agent `agent` attaches to the value
// it broadcasts at iteration `iteration`.
struct NoiseKey {
  std::uint32_t agent = 0;
  Iteration iteration = 0;
  NoiseTag tag = NoiseTag::kZeta;
};

// Counter-based Laplace source. Every draw is a pure function of
// (seed, key, element index), so draws can be taken in any order or from
// any thread and still reproduce bit-for-bit.
class LaplaceSampler {
 public:
  explicit LaplaceSampler(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Fills `out` with iid Lap(scale) elements. Throws on scale <= 0.
  void Sample(double scale, const NoiseKey& key, std::span<double> out) const;
  Vec Sample(double scale, int dim, const NoiseKey& key) const;

  // Uniform in the open interval (0, 1) for element `index` of `key`.
  double Uniform(const NoiseKey& key, std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

namespace detail {
// Philox4x32-10 block function behind LaplaceSampler, exposed for
// known-answer tests.
std::array<std::uint32_t, 4> Philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}  // namespace detail

// Laplace vector with the noise-disabled mode folded in: returns zeros when
// `enabled` is false, otherwise sampler.Sample(scale, dim, key).
Vec SampleLaplaceVector(const LaplaceSampler& sampler, double scale, int dim,
                        const NoiseKey& key, bool enabled = true);

}  // namespace tdao

#endif  // TDAO_SCHEDULES_HPP_
