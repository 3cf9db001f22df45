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

#include "tdao/problems.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tdao/error.hpp"

namespace tdao {
namespace {

// Optimality certificate for the projection onto {0 <= x <= c, 1^T x = E}:
// x = clamp(p - theta, 0, c) for a single theta.
void ExpectProjectionKkt(const Vec& p, const Vec& c, double energy, const Vec& x) {
  ASSERT_NEAR(x.sum(), energy, 1e-9 * (1.0 + energy));
  double lo = -INFINITY, hi = INFINITY;  // admissible theta range
  for (int k = 0; k < x.size(); ++k) {
    ASSERT_GE(x(k), -1e-12);
    ASSERT_LE(x(k), c(k) + 1e-12);
    if (x(k) <= 1e-12) {
      lo = std::max(lo, p(k) - 1e-9);  // clamped at 0: p_k <= theta
    } else if (x(k) >= c(k) - 1e-12) {
      hi = std::min(hi, p(k) - c(k) + 1e-9);  // clamped at c_k: p_k - c_k >= theta
    } else {
      lo = std::max(lo, p(k) - x(k) - 1e-9);
      hi = std::min(hi, p(k) - x(k) + 1e-9);
    }
  }
  EXPECT_LE(lo, hi);
}

TEST(ProjectBoxBudget, SatisfiesKktAndBeatsRandomFeasiblePoints) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 1 + trial % 7;
    Vec p(K), c(K);
    for (int k = 0; k < K; ++k) {
      p(k) = n(rng);
      c(k) = 0.1 + 2.0 * u(rng);
    }
    const double energy = u(rng) * c.sum();
    const Vec x = ProjectBoxBudget(p, c, energy);
    ExpectProjectionKkt(p, c, energy, x);
    const double best = (x - p).squaredNorm();
    for (int s = 0; s < 50; ++s) {
      // Random feasible point: a convex blend of two feasible points.
      Vec z(K);
      for (int k = 0; k < K; ++k) z(k) = u(rng) * c(k);
      const Vec f1 = c * (energy / c.sum());
      const Vec f2 = ProjectBoxBudget(z, c, energy);
      const double a = u(rng);
      EXPECT_LE(best, (a * f1 + (1 - a) * f2 - p).squaredNorm() + 1e-10);
    }
  }
}

TEST(ProjectBoxBudget, EdgeBudgetsAndErrors) {
  const Vec c = Vec::Constant(4, 2.0);
  EXPECT_TRUE(ProjectBoxBudget(Vec::Constant(4, 5.0), c, 0.0).isZero(0.0));
  EXPECT_TRUE(ProjectBoxBudget(Vec::Constant(4, -5.0), c, 8.0).isApprox(c));
  try {
    ProjectBoxBudget(Vec::Zero(4), c, 8.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleBudget);
  }
}

TEST(EvSpec, DefaultInstanceLayout) {
  const EvChargingSpec spec = DefaultEvSpec(2);
  ASSERT_EQ(spec.energy.size(), 20u);
  EXPECT_EQ(spec.slots, 13);
  EXPECT_DOUBLE_EQ(spec.capacity_kw, 240.0);
  // Model-major layout: EVs 0 and 1 share the first model.
  EXPECT_EQ(spec.max_rate[0], spec.max_rate[1]);
  EXPECT_DOUBLE_EQ(spec.energy[0], DefaultEvModels()[0].battery_kwh);
  EXPECT_DOUBLE_EQ(spec.max_rate[0](0), DefaultEvModels()[0].max_rate_kw);
  EXPECT_EQ(spec.demand[7], DefaultDemandProfile());
}

TEST(EvSpec, BundledCsvMatchesEmbeddedDefaults) {
  const auto models = LoadEvModels(TDAO_TEST_DATA_DIR "/ev_table1.csv");
  const auto expected = DefaultEvModels();
  ASSERT_EQ(models.size(), expected.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    EXPECT_EQ(models[k].name, expected[k].name);
    EXPECT_DOUBLE_EQ(models[k].max_rate_kw, expected[k].max_rate_kw);
    EXPECT_DOUBLE_EQ(models[k].battery_kwh, expected[k].battery_kwh);
  }
  EXPECT_EQ(LoadDemandProfile(TDAO_TEST_DATA_DIR "/demand_profile.csv"), DefaultDemandProfile());
}

TEST(EvChargingProblem, RejectsInfeasibleSpecs) {
  EvChargingSpec spec = DefaultEvSpec(1);
  spec.energy[0] = 1e6;
  EXPECT_THROW(EvChargingProblem{spec}, Error);
  spec = DefaultEvSpec(1);
  spec.demand[2](0) = -1.0;
  EXPECT_THROW(EvChargingProblem{spec}, Error);
}

TEST(EvChargingProblem, PriceIsContinuouslyDifferentiableAcrossKnee) {
  const EvChargingProblem p(DefaultEvSpec(2));
  const double knee = p.price_knee();
  const double h = 1e-7 * knee;
  Vec below(1), above(1), mid(1);
  below << knee - h;
  above << knee + h;
  mid << 0.5 * knee;
  EXPECT_NEAR(p.Price(mid)(0), 0.15 * std::pow(0.5 * knee, 1.5), 1e-14);
  EXPECT_NEAR(p.Price(above)(0), p.Price(below)(0), 1e-5 * p.Price(below)(0));
  EXPECT_NEAR(p.PriceSlope(above)(0), p.PriceSlope(below)(0), 1e-6 * p.PriceSlope(below)(0));
  Vec neg(1);
  neg << -0.3;
  EXPECT_EQ(p.Price(neg)(0), 0.0);
  EXPECT_EQ(p.PriceSlope(neg)(0), 0.0);
}

TEST(EvChargingProblem, WithDemandKeepsKneeAndOtherEntries) {
  const EvChargingProblem p(DefaultEvSpec(2));
  const EvChargingProblem q = p.WithDemand(4, Vec::Constant(13, 30.0));
  EXPECT_EQ(q.price_knee(), p.price_knee());
  for (int i = 0; i < p.num_agents(); ++i) {
    if (i == 4) continue;
    EXPECT_EQ(q.spec().demand[i], p.spec().demand[i]);
  }
  EXPECT_EQ(q.spec().demand[4], Vec::Constant(13, 30.0));
}

// grad F from the library against central differences of F itself.
void ExpectGlobalGradientMatchesDifferences(const AggregativeProblem& p, std::uint64_t seed) {
  AgentVectors x(p.num_agents());
  for (int i = 0; i < p.num_agents(); ++i) x[i] = p.interior_point(i, seed + i);
  const AgentVectors g = GlobalGradient(p, x);
  for (int i = 0; i < p.num_agents(); ++i) {
    for (int k = 0; k < x[i].size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i](k)));
      AgentVectors a = x, b = x;
      a[i](k) += h;
      b[i](k) -= h;
      const double fd = (GlobalCost(p, a) - GlobalCost(p, b)) / (2 * h);
      EXPECT_NEAR(g[i](k), fd, 1e-6 * std::max(1.0, std::abs(fd))) << p.name() << " " << i << "," << k;
    }
  }
}

TEST(GlobalGradient, MatchesDifferencesOfGlobalCost) {
  ExpectGlobalGradientMatchesDifferences(EvChargingProblem(DefaultEvSpec(1)), 11);
  for (auto kind : {SyntheticKind::kStronglyConvex, SyntheticKind::kConvex, SyntheticKind::kNonconvex}) {
    ExpectGlobalGradientMatchesDifferences(MakeSyntheticProblem(kind, 5, 3, 2, 9), 21);
  }
}

TEST(SyntheticProblem, DeterministicAndBounded) {
  const SyntheticProblem a = MakeSyntheticProblem(SyntheticKind::kConvex, 6, 2, 3, 4);
  const SyntheticProblem b = MakeSyntheticProblem(SyntheticKind::kConvex, 6, 2, 3, 4);
  EXPECT_EQ(a.params().A[3], b.params().A[3]);
  EXPECT_EQ(a.params().q[5], b.params().q[5]);
  EXPECT_EQ(SyntheticKindName(ParseSyntheticKind("nonconvex")), "nonconvex");
  EXPECT_THROW(ParseSyntheticKind("concave"), Error);
  // lf2 bounds grad2 f for every psi, however far the trackers wander.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int s = 0; s < 100; ++s) {
    Vec psi(3);
    for (int k = 0; k < 3; ++k) psi(k) = n(rng);
    EXPECT_LE(a.grad2_f(s % 6, a.interior_point(0, s), psi).norm(), a.constants().lf2 + 1e-12);
  }
  const SyntheticProblem sc = MakeSyntheticProblem(SyntheticKind::kStronglyConvex, 3, 2, 2, 1);
  EXPECT_GT(sc.constants().mu, 0.0);
}

// For a two-agent, one-dimensional instance the oracle must match a fine
// grid search followed by local refinement.
TEST(CentralizedOracle, MatchesGridSearch) {
  for (auto kind : {SyntheticKind::kStronglyConvex, SyntheticKind::kConvex}) {
    const SyntheticProblem p = MakeSyntheticProblem(kind, 2, 1, 1, 5);
    const OracleSolution o = CentralizedOracle(p, 1e-10, 100000);
    ASSERT_TRUE(o.converged);
    double best = INFINITY;
    const double lo = p.params().lo, hi = p.params().hi;
    for (int a = 0; a <= 800; ++a) {
      for (int b = 0; b <= 800; ++b) {
        AgentVectors x{Vec::Constant(1, lo + (hi - lo) * a / 800.0),
                       Vec::Constant(1, lo + (hi - lo) * b / 800.0)};
        best = std::min(best, GlobalCost(p, x));
      }
    }
    EXPECT_LE(o.cost, best + 1e-12);
    EXPECT_GE(o.cost, best - 1e-4);  // grid spacing 2.5e-3, quadratic model
    EXPECT_LE(ProjectedGradientNorm(p, o.x), 1e-10);
  }
}

TEST(CentralizedOracle, EvSolutionIsStationaryAndNotBeatenBySamples) {
  const EvChargingProblem p(DefaultEvSpec(1));
  const OracleSolution o = CentralizedOracle(p, 1e-8, 200000);
  EXPECT_LE(o.projected_gradient_norm, 1e-8);
  for (std::uint64_t s = 0; s < 50; ++s) {
    AgentVectors x(p.num_agents());
    for (int i = 0; i < p.num_agents(); ++i) x[i] = p.interior_point(i, 100 * s + i);
    EXPECT_LE(o.cost, GlobalCost(p, x) + 1e-9);
  }
}

TEST(FiniteDiffCheck, AcceptsAnalyticGradientsAndGuardsInputs) {
  const SyntheticProblem p = MakeSyntheticProblem(SyntheticKind::kNonconvex, 4, 3, 2, 2);
  AgentVectors x(4), psi(4);
  for (int i = 0; i < 4; ++i) {
    x[i] = p.interior_point(i, i);
    psi[i] = Vec::Constant(2, 0.3 * i);
  }
  EXPECT_LT(FiniteDiffCheck(p, x, psi, 1e-5).max_rel_error, 1e-6);
  EXPECT_THROW(FiniteDiffCheck(p, x, psi, 1e-3), Error);
  x[1](0) = p.params().hi;
  try {
    FiniteDiffCheck(p, x, psi, 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPointTooCloseToBoundary);
  }
}

}  // namespace
}  // namespace tdao
