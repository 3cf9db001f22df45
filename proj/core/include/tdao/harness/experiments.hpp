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

// Experiment drivers. Each Run* function computes results without touching
// the filesystem; RunExperiment adds file output and the exit-code policy.

#ifndef TDAO_HARNESS_EXPERIMENTS_HPP_
#define TDAO_HARNESS_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdao/engine.hpp"
#include "tdao/harness/config.hpp"
#include "tdao/network.hpp"
#include "tdao/privacy.hpp"
#include "tdao/problems.hpp"

namespace tdao::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAssertion = 2;
inline constexpr int kExitExpectedDivergence = 3;

struct Instance {
  ProblemPtr problem;
  std::shared_ptr<const EvChargingProblem> ev;  // null for synthetic problems
  Topology topology;
  std::shared_ptr<const WeightMatrix> w;
  std::vector<std::filesystem::path> inputs;  // files read while building
};

Instance BuildInstance(const ExperimentConfig& c);
std::shared_ptr<const EvChargingProblem> BuildEvProblem(
    const ExperimentConfig& c, std::vector<std::filesystem::path>* inputs = nullptr);
Topology BuildTopology(const ExperimentConfig& c, int agents);
InitPolicy ParseInitPolicy(const std::string& s);

// Runs body(0..count-1) on up to `jobs` threads. Indices are independent;
// exceptions are rethrown (first index wins) after all jobs finish.
void ParallelSeeds(int jobs, int count, const std::function<void(int)>& body);

// Named column of a metrics record: err_x, err_x_agent_max, cost, gap_F,
// grad_norm_sq, psi_consensus, y_consensus, grad_est_err, weighted_avg_gap,
// weighted_avg_grad.
double MetricValue(const MetricsRecord& r, const std::string& metric);

// Least-squares slope of log y against log t over records with
// t_lo <= t <= t_hi and t, y > 0. NaN with fewer than two points.
double FitLogLogSlope(const std::vector<MetricsRecord>& log, const std::string& metric,
                      double t_lo, double t_hi);

// Row-wise mean over runs; row k averages every run that has a row k.
std::vector<MetricsRecord> MeanLog(const std::vector<const RunResult*>& runs);

// Value of `metric` at the last record with r.t <= t (NaN when none).
double MetricAt(const RunResult& run, const std::string& metric, Iteration t);

// ---------------------------------------------------------------------------

struct SeedRun {
  std::uint64_t seed = 0;
  RunResult result;
  std::string error;  // non-empty when the seed threw
};

struct ConvergenceSummary {
  std::optional<OracleSolution> oracle;
  RegimeConditions regime;
  std::vector<SeedRun> runs;
  std::vector<MetricsRecord> mean;
  std::string metric;
  double slope = 0.0;          // fitted over [T/10, T]
  double final_metric = 0.0;   // seed mean at T
  double weighted_avg_gap = 0.0;
  double weighted_avg_grad = 0.0;
  int failed_seeds = 0;
};

ConvergenceSummary RunConvergence(const ExperimentConfig& c, const Instance& inst);

struct RobustnessSeed {
  std::uint64_t seed = 0;
  RunResult alg1;
  RunResult baseline;
  double ratio_alg1 = 0.0;      // error(late_t) / error(early_t)
  double ratio_baseline = 0.0;
  // Engine divergence flag, error(late_t) > error(early_t), or a ratio above
  // ratio_threshold.
  bool divergent_alg1 = false;
  bool divergent_baseline = false;
};

struct RobustnessSummary {
  std::optional<OracleSolution> oracle;
  std::vector<RobustnessSeed> runs;
  int divergent_alg1 = 0;
  int divergent_baseline = 0;
  int separated = 0;  // seeds with the baseline divergent and Algorithm 1 not
  RunResult clean_alg1;
  RunResult clean_baseline;
  double clean_final_rel_diff = 0.0;  // |F_alg1 - F_base| / |F_base| at T
  bool pass = false;                  // separated on >= 80% of seeds
};

// Algorithm 1 with the configured schedules against the conventional
// tracker with lambda = baseline_lambda, same seeds and therefore the same
// noise draws; plus one noise-free pair.
RobustnessSummary RunRobustness(const ExperimentConfig& c, const Instance& inst);

// ---------------------------------------------------------------------------

// Which agents misreport and what they report instead of their demand.
struct AdjacentScenario {
  std::vector<int> agents;
  std::vector<Vec> reported_demand;
};

// Moves `fraction` of the mass in slots [0, pivot) onto slots [pivot, K),
// spread evenly, so the total is unchanged.
Vec ShiftDemand(const Vec& demand, int pivot, double fraction);

// Every EV of model group `group` (1-based; EVs are laid out model-major,
// `per_model` each) reports ShiftDemand of its true demand.
AdjacentScenario GroupScenario(const EvChargingProblem& p, int group, int per_model,
                               int pivot, double fraction);
EvChargingProblem ApplyScenario(const EvChargingProblem& p, const AdjacentScenario& s);

// Agent i's cost under the true problem at the joint schedule x.
double TrueCost(const EvChargingProblem& truth, const AgentVectors& x, int i);

// Sequential best responses of `agents` to everyone else, each minimizing
// its true cost over its own feasible set; `rounds` passes.
AgentVectors BestResponse(const EvChargingProblem& truth, AgentVectors x,
                          const std::vector<int>& agents, int rounds = 5);

struct TruthfulnessSeed {
  std::uint64_t seed = 0;
  double gain_alg1 = 0.0;   // group mean of cost_P - cost_P'
  double gain_naive = 0.0;
  double global_inflation = 0.0;  // F(x under P') - F(x under P), Algorithm 1
  std::vector<double> agent_gain_alg1;
  std::vector<double> agent_gain_naive;
};

struct TruthfulnessSummary {
  AdjacentScenario scenario;
  PrivacyReport privacy;
  EtaReport eta;
  std::vector<TruthfulnessSeed> runs;
  // Noise-free conventional schedules of the misreporting group, P and P'.
  AgentVectors naive_x_p;
  AgentVectors naive_x_p_prime;
  double median_gain_alg1 = 0.0;
  double median_gain_naive = 0.0;
  double max_agent_gain_alg1 = 0.0;
  bool bounded = false;  // every per-agent Algorithm 1 gain <= eta
  bool ordered = false;  // median gain_alg1 < median gain_naive
};

TruthfulnessSummary RunTruthfulness(const ExperimentConfig& c, const Instance& inst);

// ---------------------------------------------------------------------------

struct GradcheckSummary {
  FiniteDiffReport worst;
  int points = 0;
};

// Random interior points and nearby aggregates for the configured problem.
GradcheckSummary RunGradcheck(const ExperimentConfig& c, const AggregativeProblem& p);

double Median(std::vector<double> v);

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string message;  // human-readable summary
  std::vector<std::filesystem::path> files;
};

// Dispatches on c.kind, writes outputs under ResolveOutputDir(c) and applies
// the exit-code policy: 0 ok, 2 failed assertion, 3 divergence flagged as
// expected (robustness), 1 error.
ExperimentOutcome RunExperiment(const ExperimentConfig& c);

}  // namespace tdao::harness

#endif  // TDAO_HARNESS_EXPERIMENTS_HPP_
