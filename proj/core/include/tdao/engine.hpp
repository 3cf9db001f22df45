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

// Synchronous-round execution of the noisy gradient-tracking iteration and of
// the conventional (undamped, constant-step) gradient-tracking baseline.
//
// One round at iteration t, for every agent i:
//   y+   = (1 + w_ii) y + sum_j w_ij P_Omega_t(y_j + zeta_j) + gamma1_t grad2 f_i(x, psi)
//   x+   = P_X_i(x - lambda_t [grad1 f_i(x, psi) + grad g_i(x) (y+ - y) / gamma1_t])
//   psi+ = (1 - alpha_t + gamma2_t w_ii) psi + gamma2_t sum_j w_ij (psi_j + xi_j)
//          + g_i(x+) - (1 - alpha_t) g_i(x)
// Noise is drawn once per (sender, iteration, tag), so every receiver of
// agent j sees the same perturbed value.

#ifndef TDAO_ENGINE_HPP_
#define TDAO_ENGINE_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdao/network.hpp"
#include "tdao/problems.hpp"
#include "tdao/schedules.hpp"
#include "tdao/types.hpp"

namespace tdao {

enum class Algorithm {
  kTruthful,  // the damped, noise-attenuating iteration above
  kBaseline,  // conventional gradient tracking with A = I + W
};

enum class InitPolicy { kProjectZero, kRandomFeasible };

struct AgentState {
  Vec x;
  Vec y;
  Vec psi;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// Fixed pool of worker threads running one data-parallel loop at a time.
// Each index is handled by exactly one thread, and callers write only to
// per-index slots, so results do not depend on the worker count.
class RoundExecutor {
 public:
  explicit RoundExecutor(int workers);
  ~RoundExecutor();
  RoundExecutor(const RoundExecutor&) = delete;
  RoundExecutor& operator=(const RoundExecutor&) = delete;

  int workers() const { return workers_; }
  void ParallelFor(int count, const std::function<void(int)>& body);

 private:
  struct Shared;
  int workers_;
  std::unique_ptr<Shared> shared_;
};

struct EngineOptions {
  Algorithm algorithm = Algorithm::kTruthful;
  bool noise_enabled = true;
  int workers = 1;
  double divergence_threshold = 1e12;
};

struct RunState {
  Iteration t = 0;
  std::vector<AgentState> agents;
  ProblemPtr problem;
  std::shared_ptr<const WeightMatrix> w;
  ScheduleSet schedules;
  std::uint64_t seed = 0;
  EngineOptions options;
  BallRadiusTracker ball{DecayProfile{}, 1.0};
  bool diverged = false;
  Iteration diverged_at = -1;
  std::shared_ptr<RoundExecutor> executor;

  int num_agents() const { return static_cast<int>(agents.size()); }
  AgentVectors Decisions() const;
};

// x_0 per policy, psi_0^i = g_i(x_0^i), y_0^i = grad2 f_i(x_0^i, psi_0^i).
// Throws kDimensionMismatch when W and the problem disagree on m.
RunState InitRun(ProblemPtr problem, std::shared_ptr<const WeightMatrix> w,
                 const ScheduleSet& schedules, std::uint64_t seed,
                 InitPolicy policy, const EngineOptions& options = {});

// The noise vector agent `sender` attaches at iteration t (zero when noise is
// disabled).
Vec SenderNoise(const RunState& state, int sender, NoiseTag tag, Iteration t);

// Line-4 tracker update y_{t+1} for every agent, without mutating `state`.
AgentVectors ComputeTrackerUpdate(const RunState& state);

// Search direction used by the decision update: for the truthful algorithm
// grad1 f(x, psi) + grad g(x) (y_next - y) / gamma1_t, for the baseline
// grad1 f(x, psi) + grad g(x) y (y_next is ignored).
AgentVectors GradientEstimate(const RunState& state, const AgentVectors& y_next);

// Advances one synchronous round. A non-finite or oversized entry sets
// `diverged` and leaves the offending state in place.
void Step(RunState& state);
void StepBaseline(RunState& state);

struct MetricsRecord {
  Iteration t = 0;
  double err_x = 0.0;            // ||x_t - x*||^2 (stacked)
  double err_x_agent_max = 0.0;  // max_i ||x_t^i - x*^i||^2
  double cost = 0.0;             // F(x_t)
  double gap_f = 0.0;            // F(x_t) - F(x*)
  double grad_norm_sq = 0.0;     // ||grad F(x_t)||^2
  double psi_consensus = 0.0;    // ||psi_t - 1 (x) phi(x_t)||^2
  double y_consensus = 0.0;      // ||y_t - 1 (x) ybar_t||^2
  double grad_est_err = 0.0;     // ||grad F~(x_t) - grad F(x_t)||^2
  double weighted_avg_gap = 0.0;   // sum lambda_s gap_s / sum lambda_s, s <= t
  double weighted_avg_grad = 0.0;  // same for ||grad F||^2
};

struct RunResult {
  std::vector<MetricsRecord> log;
  bool diverged = false;
  Iteration diverged_at = -1;
  double weighted_avg_gap = 0.0;
  double weighted_avg_grad = 0.0;
};

// Steps `state` up to iteration T (absolute), recording every `stride`
// iterations and at T. Without an oracle err_x is zero and gap_f is F(x_t).
// Stops early on divergence and returns the partial log.
RunResult Run(RunState& state, Iteration T, Iteration stride,
              const OracleSolution* oracle = nullptr);

// CSV with columns t, err_x, gap_F, grad_norm_sq, psi_consensus,
// y_consensus, grad_est_err, weighted_avg_gap, weighted_avg_grad; numbers in
// shortest round-trip form. A divergence adds a trailing "# diverged" line.
std::string MetricsCsv(const RunResult& result);

}  // namespace tdao

#endif  // TDAO_ENGINE_HPP_
