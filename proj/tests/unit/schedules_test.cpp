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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "tdao/error.hpp"

namespace tdao {
namespace {

TEST(DecayProfile, MatchesClosedForm) {
  const DecayProfile p{2.0, 0.5};
  EXPECT_DOUBLE_EQ(p.value(0), 2.0);
  EXPECT_DOUBLE_EQ(p.value(3), 1.0);
  EXPECT_DOUBLE_EQ(EvalProfile(p, 8), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ((DecayProfile{0.01, 0.0}).value(123456), 0.01);
}

TEST(ScheduleSet, ValidateRejectsBadBases) {
  ScheduleSet s;
  EXPECT_NO_THROW(s.Validate());
  s.gamma2.base = 0.0;
  EXPECT_THROW(s.Validate(), Error);
  s = ScheduleSet{};
  s.noise.xi.exponent = std::nan("");
  EXPECT_THROW(s.Validate(), Error);
}

TEST(NoiseSchedule, ElementScaleIsSigmaOverRootTwo) {
  NoiseSchedule n;
  n.zeta = {3.0, 0.0};
  EXPECT_DOUBLE_EQ(n.zeta_scale(0, 7), 3.0 / std::sqrt(2.0));
}

TEST(NoiseSchedule, ExtremesTrackLimitingAgent) {
  NoiseSchedule n;
  n.xi_per_agent = {{2.0, 0.3}, {0.5, 0.2}, {1.0, 0.4}};
  const auto e = n.xi_extremes(3);
  EXPECT_DOUBLE_EQ(e.min_base, 0.5);
  EXPECT_EQ(e.limiting_agent, 1);
  EXPECT_DOUBLE_EQ(e.min_exponent, 0.2);
  EXPECT_DOUBLE_EQ(e.max_exponent, 0.4);
  EXPECT_TRUE(n.heterogeneous());
}

TEST(BallRadius, TrackerAgreesWithDirectSum) {
  const DecayProfile g1{1.0, 0.1};
  BallRadiusTracker tracker(g1, 2.5);
  for (Iteration t = 0; t <= 500; ++t) {
    double sum = 0.0;
    for (Iteration p = 0; p < t; ++p) sum += std::pow(p + 1.0, -0.1);
    ASSERT_NEAR(tracker.radius(), (1.0 + sum) * 2.5, 1e-10 * (1.0 + sum));
    ASSERT_NEAR(BallRadius(g1, 2.5, t), tracker.radius(), 1e-9);
    tracker.Advance();
  }
}

// Reference outputs of the Philox4x32-10 block function published with the
// Random123 library.
TEST(Philox, KnownAnswers) {
  using C = std::array<std::uint32_t, 4>;
  using K = std::array<std::uint32_t, 2>;
  EXPECT_EQ(detail::Philox4x32_10(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(detail::Philox4x32_10(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                  K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(detail::Philox4x32_10(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                  K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(LaplaceSampler, PureFunctionOfSeedAndKey) {
  const LaplaceSampler a(42), b(42), c(43);
  const NoiseKey key{3, 17, NoiseTag::kXi};
  const Vec va = a.Sample(0.7, 5, key);
  EXPECT_EQ(va, b.Sample(0.7, 5, key));
  EXPECT_NE(va, c.Sample(0.7, 5, key));
  EXPECT_NE(va, a.Sample(0.7, 5, NoiseKey{3, 17, NoiseTag::kZeta}));
  EXPECT_NE(va, a.Sample(0.7, 5, NoiseKey{4, 17, NoiseTag::kXi}));
  EXPECT_NE(va, a.Sample(0.7, 5, NoiseKey{3, 18, NoiseTag::kXi}));
  // A longer draw extends the shorter one element by element.
  EXPECT_EQ(a.Sample(0.7, 9, key).head(5), va);
}

TEST(LaplaceSampler, DisabledModeIsExactlyZero) {
  const LaplaceSampler s(1);
  const Vec v = SampleLaplaceVector(s, 1.0, 4, NoiseKey{}, false);
  EXPECT_EQ(v, Vec::Zero(4));
}

TEST(LaplaceSampler, RejectsNonPositiveScale) {
  const LaplaceSampler s(1);
  EXPECT_THROW(s.Sample(0.0, 3, NoiseKey{}), Error);
  EXPECT_THROW(s.Sample(-1.0, 3, NoiseKey{}), Error);
}

// Kolmogorov-Smirnov distance against the Laplace CDF, plus the first two
// moments, on 200k draws spread over many keys.
TEST(LaplaceSampler, MatchesLaplaceDistribution) {
  const double nu = 1.7;
  const LaplaceSampler s(2024);
  std::vector<double> xs;
  for (std::uint32_t agent = 0; agent < 20; ++agent) {
    for (Iteration t = 0; t < 1000; ++t) {
      const Vec v = s.Sample(nu, 10, NoiseKey{agent, t, NoiseTag::kZeta});
      xs.insert(xs.end(), v.data(), v.data() + v.size());
    }
  }
  const double n = static_cast<double>(xs.size());
  double mean = 0.0, sq = 0.0;
  for (double x : xs) {
    mean += x;
    sq += x * x;
  }
  mean /= n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 5.0 * std::sqrt(2.0) * nu / std::sqrt(n));
  EXPECT_NEAR(var / (2.0 * nu * nu), 1.0, 0.02);

  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double x = xs[k];
    const double cdf = x < 0 ? 0.5 * std::exp(x / nu) : 1.0 - 0.5 * std::exp(-x / nu);
    d = std::max({d, std::abs(cdf - k / n), std::abs(cdf - (k + 1) / n)});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(n));  // 1% critical value
}

}  // namespace
}  // namespace tdao
