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

#include <memory>

#include <benchmark/benchmark.h>

#include "tdao/engine.hpp"
#include "tdao/harness/config.hpp"
#include "tdao/network.hpp"
#include "tdao/privacy.hpp"
#include "tdao/problems.hpp"
#include "tdao/schedules.hpp"

namespace {

using namespace tdao;

RunState EvState(int per_model, int workers) {
  auto problem = std::make_shared<EvChargingProblem>(DefaultEvSpec(per_model));
  const int m = problem->num_agents();
  auto w = std::make_shared<WeightMatrix>(
      BuildWeightMatrix(GenerateKRegular(m, 4, 1), 0.2, SpectralPolicy::kReport));
  EngineOptions o;
  o.workers = workers;
  return InitRun(problem, w, harness::PresetSchedules("ev-convergence"), 1,
                 InitPolicy::kProjectZero, o);
}

// One synchronous round on the EV instance; arg 0 is EVs per model, arg 1
// the worker count.
void BM_StepEv(benchmark::State& state) {
  RunState s = EvState(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    Step(s);
    benchmark::DoNotOptimize(s.agents.front().x.data());
  }
  state.counters["agents"] = s.num_agents();
}
BENCHMARK(BM_StepEv)->Args({2, 1})->Args({2, 4})->Args({20, 1})->Args({20, 4})->UseRealTime();

void BM_StepBaselineEv(benchmark::State& state) {
  RunState s = EvState(2, 1);
  s.options.algorithm = Algorithm::kBaseline;
  for (auto _ : state) {
    Step(s);
    benchmark::DoNotOptimize(s.agents.front().x.data());
  }
}
BENCHMARK(BM_StepBaselineEv);

void BM_StepSynthetic(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  auto problem = std::make_shared<SyntheticProblem>(
      MakeSyntheticProblem(SyntheticKind::kStronglyConvex, m, 2, 2, 3));
  auto w = std::make_shared<WeightMatrix>(
      BuildWeightMatrix(Topology::Ring(m), 0.2, SpectralPolicy::kReport));
  RunState s = InitRun(problem, w, harness::PresetSchedules("corollary1-sc"), 1,
                       InitPolicy::kProjectZero);
  for (auto _ : state) {
    Step(s);
    benchmark::DoNotOptimize(s.agents.front().x.data());
  }
}
BENCHMARK(BM_StepSynthetic)->Arg(10)->Arg(100);

void BM_ProjectBoxBudget(benchmark::State& state) {
  const EvChargingSpec spec = DefaultEvSpec(1);
  Vec point = Vec::LinSpaced(spec.slots, -3.0, 9.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ProjectBoxBudget(point, spec.max_rate[4], spec.energy[4]));
  }
}
BENCHMARK(BM_ProjectBoxBudget);

void BM_LaplaceSample(benchmark::State& state) {
  const LaplaceSampler sampler(7);
  const int dim = static_cast<int>(state.range(0));
  Iteration t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.Sample(0.5, dim, NoiseKey{3, t++, NoiseTag::kZeta}));
  }
  state.SetItemsProcessed(state.iterations() * dim);
}
BENCHMARK(BM_LaplaceSample)->Arg(2)->Arg(13)->Arg(1024);

void BM_Epsilon(benchmark::State& state) {
  const ScheduleSet s = harness::PresetSchedules("sec5-truthful");
  for (auto _ : state) benchmark::DoNotOptimize(Epsilon(state.range(0), s, 0.8).epsilon);
}
BENCHMARK(BM_Epsilon)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_WeightMatrix(benchmark::State& state) {
  const Topology t = GenerateKRegular(static_cast<int>(state.range(0)), 4, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildWeightMatrix(t, 0.2, SpectralPolicy::kReport).w_hat());
  }
}
BENCHMARK(BM_WeightMatrix)->Arg(20)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
