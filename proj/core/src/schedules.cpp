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

#include "tdao/schedules.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "tdao/error.hpp"

namespace tdao {

double DecayProfile::value(Iteration t) const {
  if (exponent == 0.0) return base;
  return base * std::pow(static_cast<double>(t) + 1.0, -exponent);
}

double EvalProfile(const DecayProfile& profile, Iteration t) {
  return profile.value(t);
}

const DecayProfile& NoiseSchedule::zeta_for(int agent) const {
  return zeta_per_agent.empty() ? zeta : zeta_per_agent.at(agent);
}

const DecayProfile& NoiseSchedule::xi_for(int agent) const {
  return xi_per_agent.empty() ? xi : xi_per_agent.at(agent);
}

double NoiseSchedule::zeta_scale(int agent, Iteration t) const {
  return zeta_for(agent).value(t) / std::sqrt(2.0);
}

double NoiseSchedule::xi_scale(int agent, Iteration t) const {
  return xi_for(agent).value(t) / std::sqrt(2.0);
}

namespace {

NoiseSchedule::Extremes ExtremesOf(const std::vector<DecayProfile>& per_agent,
                                   const DecayProfile& fallback, int agents) {
  NoiseSchedule::Extremes e;
  if (per_agent.empty()) {
    e.min_base = fallback.base;
    e.min_exponent = e.max_exponent = fallback.exponent;
    return e;
  }
  const int n = std::min<int>(agents, static_cast<int>(per_agent.size()));
  e.min_base = std::numeric_limits<double>::infinity();
  e.min_exponent = std::numeric_limits<double>::infinity();
  e.max_exponent = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const DecayProfile& p = per_agent[i];
    if (p.base < e.min_base) {
      e.min_base = p.base;
      e.limiting_agent = i;
    }
    e.min_exponent = std::min(e.min_exponent, p.exponent);
    e.max_exponent = std::max(e.max_exponent, p.exponent);
  }
  return e;
}

void CheckProfile(const DecayProfile& p, const char* name) {
  if (!(p.base > 0.0) || !std::isfinite(p.base)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + " base must be positive and finite");
  }
  if (!std::isfinite(p.exponent)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + " exponent must be finite");
  }
}

}  // namespace

NoiseSchedule::Extremes NoiseSchedule::zeta_extremes(int agents) const {
  return ExtremesOf(zeta_per_agent, zeta, agents);
}

NoiseSchedule::Extremes NoiseSchedule::xi_extremes(int agents) const {
  return ExtremesOf(xi_per_agent, xi, agents);
}

void ScheduleSet::Validate() const {
  CheckProfile(lambda, "lambda");
  CheckProfile(alpha, "alpha");
  CheckProfile(gamma1, "gamma1");
  CheckProfile(gamma2, "gamma2");
  CheckProfile(noise.zeta, "sigma_zeta");
  CheckProfile(noise.xi, "sigma_xi");
  for (const auto& p : noise.zeta_per_agent) CheckProfile(p, "sigma_zeta[i]");
  for (const auto& p : noise.xi_per_agent) CheckProfile(p, "sigma_xi[i]");
}

double BallRadius(const DecayProfile& gamma1, double lf2, Iteration t) {
  double sum = 0.0;
  for (Iteration p = 0; p < t; ++p) sum += gamma1.value(p);
  return (1.0 + sum) * lf2;
}

BallRadiusTracker::BallRadiusTracker(DecayProfile gamma1, double lf2)
    : gamma1_(gamma1), lf2_(lf2) {}

void BallRadiusTracker::Advance() {
  partial_sum_ += gamma1_.value(t_);
  ++t_;
}

namespace {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2,
// 3", SC'11).
using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t* hi,
                    std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *hi = static_cast<std::uint32_t>(p >> 32);
  *lo = static_cast<std::uint32_t>(p);
}

Philox4x32Ctr Philox4x32(Philox4x32Ctr ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kPhiloxM0, ctr[0], &hi0, &lo0);
    MulHiLo(kPhiloxM1, ctr[2], &hi1, &lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

// 53 random bits mapped to the open interval (0, 1).
inline double ToOpenUnit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> detail::Philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key) {
  return Philox4x32(ctr, key);
}

double LaplaceSampler::Uniform(const NoiseKey& key, std::uint64_t index) const {
  const auto iter = static_cast<std::uint64_t>(key.iteration);
  const Philox4x32Ctr ctr = {
      static_cast<std::uint32_t>(index >> 1), key.agent,
      static_cast<std::uint32_t>(iter),
      static_cast<std::uint32_t>(iter >> 32) ^
          (static_cast<std::uint32_t>(key.tag) << 28)};
  const Philox4x32Key k = {static_cast<std::uint32_t>(seed_),
                           static_cast<std::uint32_t>(seed_ >> 32)};
  const Philox4x32Ctr r = Philox4x32(ctr, k);
  return (index & 1u) == 0 ? ToOpenUnit(r[0], r[1]) : ToOpenUnit(r[2], r[3]);
}

void LaplaceSampler::Sample(double scale, const NoiseKey& key,
                            std::span<double> out) const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Laplace scale must be positive and finite");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double v = Uniform(key, k) - 0.5;
    // Inverse CDF; |v| < 0.5 strictly so the log argument stays positive.
    const double mag = -scale * std::log1p(-2.0 * std::abs(v));
    out[k] = v < 0.0 ? -mag : mag;
  }
}

Vec LaplaceSampler::Sample(double scale, int dim, const NoiseKey& key) const {
  if (dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "Laplace dimension must be >= 1");
  }
  Vec out(dim);
  Sample(scale, key, std::span<double>(out.data(), out.size()));
  return out;
}

Vec SampleLaplaceVector(const LaplaceSampler& sampler, double scale, int dim,
                        const NoiseKey& key, bool enabled) {
  if (!enabled) return Vec::Zero(dim);
  return sampler.Sample(scale, dim, key);
}

}  // namespace tdao
