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

#include "tdao/engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "tdao/error.hpp"
#include "tdao/harness/config.hpp"

namespace tdao {
namespace {

using harness::PresetSchedules;

std::shared_ptr<const WeightMatrix> Weights(const Topology& t, double w = 0.2) {
  return std::make_shared<WeightMatrix>(BuildWeightMatrix(t, w, SpectralPolicy::kReport));
}

ProblemPtr SmallEv(int per_model = 1) {
  return std::make_shared<EvChargingProblem>(DefaultEvSpec(per_model));
}

ProblemPtr Synthetic(SyntheticKind kind, int m = 6) {
  return std::make_shared<SyntheticProblem>(MakeSyntheticProblem(kind, m, 2, 2, 3));
}

EngineOptions Noise(bool on, int workers = 1) {
  EngineOptions o;
  o.noise_enabled = on;
  o.workers = workers;
  return o;
}

TEST(InitRun, TrackersStartAtLocalValues) {
  const auto p = Synthetic(SyntheticKind::kConvex);
  const RunState s = InitRun(p, Weights(Topology::Ring(6)), PresetSchedules("corollary1-cvx"), 1,
                             InitPolicy::kRandomFeasible);
  for (int i = 0; i < 6; ++i) {
    const AgentState& a = s.agents[i];
    EXPECT_EQ(a.x, p->project(i, a.x));
    EXPECT_EQ(a.psi, p->g(i, a.x));
    EXPECT_EQ(a.y, p->grad2_f(i, a.x, a.psi));
  }
  EXPECT_THROW(InitRun(p, Weights(Topology::Ring(5)), ScheduleSet{}, 1, InitPolicy::kProjectZero),
               Error);
}

// Noise-free conservation: sum_i psi_i = sum_i g_i(x_i) and
// ybar_{t+1} = ybar_t + gamma1_t * mean_i grad2 f_i(x_i, psi_i).
TEST(Step, NoiseFreeConservationLaws) {
  const auto p = Synthetic(SyntheticKind::kStronglyConvex);
  RunState s = InitRun(p, Weights(GenerateKRegular(6, 3, 2)), PresetSchedules("corollary1-sc"), 1,
                       InitPolicy::kRandomFeasible, Noise(false));
  for (int it = 0; it < 2000; ++it) {
    Vec ybar = Vec::Zero(2), drift = Vec::Zero(2);
    for (int i = 0; i < 6; ++i) {
      ybar += s.agents[i].y / 6.0;
      drift += p->grad2_f(i, s.agents[i].x, s.agents[i].psi) / 6.0;
    }
    const double g1 = s.schedules.gamma1.value(s.t);
    Step(s);
    Vec psum = Vec::Zero(2), gsum = Vec::Zero(2), ynext = Vec::Zero(2);
    for (int i = 0; i < 6; ++i) {
      psum += s.agents[i].psi;
      gsum += p->g(i, s.agents[i].x);
      ynext += s.agents[i].y / 6.0;
    }
    ASSERT_LE((psum - gsum).cwiseAbs().maxCoeff(), 1e-10) << "t=" << s.t;
    ASSERT_LE((ynext - ybar - g1 * drift).norm(), 1e-10) << "t=" << s.t;
  }
}

TEST(Step, TrackersStayInsideTheGrowingBall) {
  const auto p = SmallEv(2);
  for (const char* preset : {"ev-convergence", "sec5-truthful"}) {
    RunState s = InitRun(p, Weights(GenerateKRegular(20, 4, 1)), PresetSchedules(preset), 9,
                         InitPolicy::kProjectZero, Noise(true));
    for (int it = 0; it < 300; ++it) {
      Step(s);
      const double r = BallRadius(s.schedules.gamma1, p->constants().lf2, s.t);
      for (const AgentState& a : s.agents) ASSERT_LE(a.y.norm(), r + 1e-9) << preset << " t=" << s.t;
    }
  }
}

TEST(Step, BitIdenticalAcrossWorkerCounts) {
  const auto p = SmallEv(2);
  const auto w = Weights(GenerateKRegular(20, 4, 1));
  RunState a = InitRun(p, w, PresetSchedules("ev-convergence"), 5, InitPolicy::kRandomFeasible,
                       Noise(true, 1));
  RunState b = InitRun(p, w, PresetSchedules("ev-convergence"), 5, InitPolicy::kRandomFeasible,
                       Noise(true, 4));
  for (int it = 0; it < 200; ++it) {
    Step(a);
    Step(b);
  }
  EXPECT_EQ(a.agents, b.agents);
}

TEST(SenderNoise, OneBroadcastDrawPerSenderIterationAndTag) {
  const auto p = Synthetic(SyntheticKind::kConvex);
  const ScheduleSet sched = PresetSchedules("corollary1-cvx");
  const RunState s = InitRun(p, Weights(Topology::Ring(6)), sched, 77, InitPolicy::kProjectZero);
  const LaplaceSampler ref(77);
  for (Iteration t : {0, 5, 1000}) {
    for (int j = 0; j < 6; ++j) {
      const Vec z = SenderNoise(s, j, NoiseTag::kZeta, t);
      EXPECT_EQ(z, ref.Sample(sched.noise.zeta_scale(j, t), 2,
                              NoiseKey{static_cast<std::uint32_t>(j), t, NoiseTag::kZeta}));
      EXPECT_EQ(z, SenderNoise(s, j, NoiseTag::kZeta, t));
      EXPECT_NE(z, SenderNoise(s, j, NoiseTag::kXi, t));
    }
  }
  const RunState quiet = InitRun(p, Weights(Topology::Ring(6)), sched, 77, InitPolicy::kProjectZero,
                                 Noise(false));
  EXPECT_TRUE(SenderNoise(quiet, 2, NoiseTag::kXi, 3).isZero(0.0));
}

TEST(ComputeTrackerUpdate, PureAndConsistentWithStep) {
  const auto p = Synthetic(SyntheticKind::kConvex);
  RunState s = InitRun(p, Weights(Topology::Ring(6)), PresetSchedules("corollary1-cvx"), 3,
                       InitPolicy::kRandomFeasible);
  for (int it = 0; it < 5; ++it) Step(s);
  const auto before = s.agents;
  const AgentVectors y = ComputeTrackerUpdate(s);
  EXPECT_EQ(s.agents, before);
  Step(s);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(s.agents[i].y, y[i]);
}

TEST(StepBaseline, ZeroStepsizeFreezesDecisions) {
  const auto p = SmallEv(1);
  ScheduleSet sched = PresetSchedules("ev-convergence");
  sched.lambda = {0.01, 0.0};
  EngineOptions o = Noise(true);
  o.algorithm = Algorithm::kBaseline;
  RunState s = InitRun(p, Weights(Topology::Ring(10)), sched, 1, InitPolicy::kRandomFeasible, o);
  s.schedules.lambda.base = 0.0;  // past validation on purpose
  const AgentVectors x0 = s.Decisions();
  for (int it = 0; it < 50; ++it) StepBaseline(s);
  EXPECT_EQ(s.Decisions(), x0);
}

TEST(StepBaseline, NoiseFreeAgreesWithAlgorithmOne) {
  const auto p = SmallEv(2);
  const auto w = Weights(GenerateKRegular(20, 4, 1));
  ScheduleSet base = PresetSchedules("ev-convergence");
  base.lambda = {0.01, 0.0};
  EngineOptions bo = Noise(false);
  bo.algorithm = Algorithm::kBaseline;
  RunState a = InitRun(p, w, PresetSchedules("ev-convergence"), 1, InitPolicy::kProjectZero,
                       Noise(false));
  RunState b = InitRun(p, w, base, 1, InitPolicy::kProjectZero, bo);
  const RunResult ra = tdao::Run(a, 1000, 1000);
  const RunResult rb = tdao::Run(b, 1000, 1000);
  const double fa = ra.log.back().cost, fb = rb.log.back().cost;
  EXPECT_LE(std::abs(fa - fb), 0.01 * std::abs(fb));
}

TEST(Run, RecordsEveryStrideAndFlagsDivergence) {
  const auto p = Synthetic(SyntheticKind::kConvex);
  RunState s = InitRun(p, Weights(Topology::Ring(6)), PresetSchedules("corollary1-cvx"), 1,
                       InitPolicy::kProjectZero);
  const RunResult r = tdao::Run(s, 1000, 50);
  ASSERT_EQ(r.log.size(), 21u);
  EXPECT_EQ(r.log.back().t, 1000);
  EXPECT_FALSE(r.diverged);
  const std::string csv = MetricsCsv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,err_x,gap_F,grad_norm_sq,psi_consensus,y_consensus,grad_est_err,weighted_avg_gap,"
            "weighted_avg_grad");

  EngineOptions o;
  o.divergence_threshold = 1e-3;
  RunState d = InitRun(p, Weights(Topology::Ring(6)), PresetSchedules("corollary1-cvx"), 1,
                       InitPolicy::kProjectZero, o);
  const RunResult rd = tdao::Run(d, 1000, 10);
  EXPECT_TRUE(rd.diverged);
  EXPECT_EQ(rd.diverged_at, 1);
  EXPECT_NE(MetricsCsv(rd).find("# diverged at t=1"), std::string::npos);
  EXPECT_THROW(tdao::Run(s, 10, 0), Error);
}

// Two identical EVs; the first one reports a demand profile with load moved
// past the pivot slot. The noise-free conventional run then shifts the
// second EV's charging toward the early slots.
TEST(StepBaseline, MisreportShiftsNeighbourTowardEarlySlots) {
  EvChargingSpec spec = MakeEvSpec({DefaultEvModels()[1]}, 2, DefaultDemandProfile());
  const auto truth = std::make_shared<EvChargingProblem>(spec);
  Vec lie = spec.demand[0];
  const double moved = 0.4 * lie.head(3).sum();
  lie.head(3) *= 0.6;
  lie.tail(10).array() += moved / 10.0;
  const auto lied = std::make_shared<EvChargingProblem>(truth->WithDemand(0, lie));

  ScheduleSet sched = PresetSchedules("ev-convergence");
  sched.lambda = {0.01, 0.0};
  EngineOptions o = Noise(false);
  o.algorithm = Algorithm::kBaseline;
  const auto w = Weights(Topology::Complete(2));
  RunState a = InitRun(truth, w, sched, 1, InitPolicy::kProjectZero, o);
  RunState b = InitRun(lied, w, sched, 1, InitPolicy::kProjectZero, o);
  tdao::Run(a, 1000, 1000);
  tdao::Run(b, 1000, 1000);
  const double early_truth = a.agents[1].x.head(3).sum();
  const double early_lie = b.agents[1].x.head(3).sum();
  EXPECT_GT(early_lie, early_truth);
}

}  // namespace
}  // namespace tdao
