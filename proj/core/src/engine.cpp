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
#include <condition_variable>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "tdao/error.hpp"

namespace tdao {

// ---------------------------------------------------------------------------
// RoundExecutor

struct RoundExecutor::Shared {
  std::mutex mu;
  std::condition_variable start;
  std::condition_variable done;
  const std::function<void(int)>* body = nullptr;
  int count = 0;
  std::uint64_t generation = 0;
  int pending = 0;
  bool stop = false;
  std::vector<std::thread> threads;
};

RoundExecutor::RoundExecutor(int workers)
    : workers_(std::max(1, workers)), shared_(std::make_unique<Shared>()) {
  Shared* s = shared_.get();
  const int stride = workers_;
  for (int k = 1; k < workers_; ++k) {
    s->threads.emplace_back([s, k, stride] {
      std::uint64_t seen = 0;
      for (;;) {
        const std::function<void(int)>* body;
        int count;
        {
          std::unique_lock lock(s->mu);
          s->start.wait(lock, [&] { return s->stop || s->generation != seen; });
          if (s->stop) return;
          seen = s->generation;
          body = s->body;
          count = s->count;
        }
        for (int i = k; i < count; i += stride) (*body)(i);
        {
          std::lock_guard lock(s->mu);
          if (--s->pending == 0) s->done.notify_one();
        }
      }
    });
  }
}

RoundExecutor::~RoundExecutor() {
  {
    std::lock_guard lock(shared_->mu);
    shared_->stop = true;
  }
  shared_->start.notify_all();
  for (auto& th : shared_->threads) th.join();
}

void RoundExecutor::ParallelFor(int count, const std::function<void(int)>& body) {
  if (workers_ == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  Shared* s = shared_.get();
  {
    std::lock_guard lock(s->mu);
    s->body = &body;
    s->count = count;
    s->pending = workers_ - 1;
    ++s->generation;
  }
  s->start.notify_all();
  for (int i = 0; i < count; i += workers_) body(i);
  std::unique_lock lock(s->mu);
  s->done.wait(lock, [&] { return s->pending == 0; });
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kGammaFloor = 1e-300;

void ForEachAgent(const RunState& state, const std::function<void(int)>& body) {
  if (state.executor) {
    state.executor->ParallelFor(state.num_agents(), body);
  } else {
    for (int i = 0; i < state.num_agents(); ++i) body(i);
  }
}

Vec ProjectBall(const Vec& v, double radius) {
  const double n = v.norm();
  return n > radius ? Vec(v * (radius / n)) : v;
}

bool Healthy(const Vec& v, double threshold) {
  for (int k = 0; k < v.size(); ++k) {
    if (!(std::abs(v(k)) <= threshold)) return false;
  }
  return true;
}

void CheckDivergence(RunState& state) {
  const double limit = state.options.divergence_threshold;
  for (const AgentState& a : state.agents) {
    if (!Healthy(a.x, limit) || !Healthy(a.y, limit) || !Healthy(a.psi, limit)) {
      state.diverged = true;
      state.diverged_at = state.t;
      return;
    }
  }
}

// y_j + zeta_j as received by neighbors; projected onto the ball when
// `radius` is positive.
AgentVectors PerceivedTrackers(const RunState& state, double radius) {
  AgentVectors seen(state.num_agents());
  ForEachAgent(state, [&](int j) {
    Vec v = state.agents[j].y + SenderNoise(state, j, NoiseTag::kZeta, state.t);
    seen[j] = radius > 0.0 ? ProjectBall(v, radius) : v;
  });
  return seen;
}

AgentVectors PerceivedAggregates(const RunState& state) {
  AgentVectors seen(state.num_agents());
  ForEachAgent(state, [&](int j) {
    seen[j] = state.agents[j].psi + SenderNoise(state, j, NoiseTag::kXi, state.t);
  });
  return seen;
}

Vec MixNeighbors(const WeightMatrix& w, int i, const AgentVectors& values) {
  Vec acc = Vec::Zero(values[i].size());
  for (const auto& [j, wij] : w.row(i)) acc += wij * values[j];
  return acc;
}

Vec TrackerUpdateFor(const RunState& state, int i, const AgentVectors& y_seen) {
  const AgentState& a = state.agents[i];
  const double g1 = state.schedules.gamma1.value(state.t);
  return (1.0 + state.w->diagonal(i)) * a.y + MixNeighbors(*state.w, i, y_seen) +
         g1 * state.problem->grad2_f(i, a.x, a.psi);
}

Vec TruthfulDirection(const RunState& state, int i, const Vec& y_next) {
  const AgentState& a = state.agents[i];
  const double inv_g1 =
      1.0 / std::max(state.schedules.gamma1.value(state.t), kGammaFloor);
  return state.problem->grad1_f(i, a.x, a.psi) +
         state.problem->grad_g_times(i, a.x, (y_next - a.y) * inv_g1);
}

Vec BaselineDirection(const RunState& state, int i) {
  const AgentState& a = state.agents[i];
  return state.problem->grad1_f(i, a.x, a.psi) +
         state.problem->grad_g_times(i, a.x, a.y);
}

}  // namespace

AgentVectors RunState::Decisions() const {
  AgentVectors x;
  x.reserve(agents.size());
  for (const AgentState& a : agents) x.push_back(a.x);
  return x;
}

RunState InitRun(ProblemPtr problem, std::shared_ptr<const WeightMatrix> w,
                 const ScheduleSet& schedules, std::uint64_t seed,
                 InitPolicy policy, const EngineOptions& options) {
  if (!problem || !w) {
    throw Error(ErrorCode::kInvalidArgument, "problem and W are required");
  }
  const int m = problem->num_agents();
  if (w->size() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("W is {0}x{0} but the problem has {1} agents", w->size(), m));
  }
  schedules.Validate();
  const int d = problem->aggregate_dim();
  if (!schedules.noise.zeta_per_agent.empty() &&
      static_cast<int>(schedules.noise.zeta_per_agent.size()) != m) {
    throw Error(ErrorCode::kDimensionMismatch, "per-agent zeta profiles must list every agent");
  }
  if (!schedules.noise.xi_per_agent.empty() &&
      static_cast<int>(schedules.noise.xi_per_agent.size()) != m) {
    throw Error(ErrorCode::kDimensionMismatch, "per-agent xi profiles must list every agent");
  }

  RunState state;
  state.problem = std::move(problem);
  state.w = std::move(w);
  state.schedules = schedules;
  state.seed = seed;
  state.options = options;
  state.ball = BallRadiusTracker(schedules.gamma1, state.problem->constants().lf2);
  if (options.workers > 1) state.executor = std::make_shared<RoundExecutor>(options.workers);

  const AggregativeProblem& p = *state.problem;
  state.agents.resize(m);
  for (int i = 0; i < m; ++i) {
    AgentState& a = state.agents[i];
    if (policy == InitPolicy::kProjectZero) {
      a.x = p.project(i, Vec::Zero(p.decision_dim(i)));
    } else {
      a.x = p.project(i, p.interior_point(i, seed * 0x9E3779B97F4A7C15ull + i + 1));
    }
    a.psi = p.g(i, a.x);
    if (a.psi.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "g_i has the wrong dimension");
    }
    a.y = p.grad2_f(i, a.x, a.psi);
  }
  return state;
}

Vec SenderNoise(const RunState& state, int sender, NoiseTag tag, Iteration t) {
  const int d = state.problem->aggregate_dim();
  if (!state.options.noise_enabled) return Vec::Zero(d);
  const NoiseSchedule& noise = state.schedules.noise;
  const double scale = tag == NoiseTag::kZeta ? noise.zeta_scale(sender, t)
                                              : noise.xi_scale(sender, t);
  const NoiseKey key{static_cast<std::uint32_t>(sender), t, tag};
  return SampleLaplaceVector(LaplaceSampler(state.seed), scale, d, key);
}

AgentVectors ComputeTrackerUpdate(const RunState& state) {
  const AgentVectors seen = PerceivedTrackers(state, state.ball.radius());
  AgentVectors next(state.num_agents());
  ForEachAgent(state, [&](int i) { next[i] = TrackerUpdateFor(state, i, seen); });
  return next;
}

AgentVectors GradientEstimate(const RunState& state, const AgentVectors& y_next) {
  AgentVectors out(state.num_agents());
  ForEachAgent(state, [&](int i) {
    out[i] = state.options.algorithm == Algorithm::kBaseline
                 ? BaselineDirection(state, i)
                 : TruthfulDirection(state, i, y_next[i]);
  });
  return out;
}

void Step(RunState& state) {
  if (state.options.algorithm == Algorithm::kBaseline) {
    StepBaseline(state);
    return;
  }
  const AggregativeProblem& p = *state.problem;
  const Iteration t = state.t;
  const double lambda = state.schedules.lambda.value(t);
  const double alpha = state.schedules.alpha.value(t);
  const double g2 = state.schedules.gamma2.value(t);

  const AgentVectors y_seen = PerceivedTrackers(state, state.ball.radius());
  const AgentVectors psi_seen = PerceivedAggregates(state);
  std::vector<AgentState> next(state.num_agents());
  ForEachAgent(state, [&](int i) {
    const AgentState& a = state.agents[i];
    AgentState& n = next[i];
    n.y = TrackerUpdateFor(state, i, y_seen);
    n.x = p.project(i, a.x - lambda * TruthfulDirection(state, i, n.y));
    n.psi = (1.0 - alpha + g2 * state.w->diagonal(i)) * a.psi +
            g2 * MixNeighbors(*state.w, i, psi_seen) + p.g(i, n.x) -
            (1.0 - alpha) * p.g(i, a.x);
  });
  state.agents.swap(next);
  state.ball.Advance();
  ++state.t;
  CheckDivergence(state);
}

void StepBaseline(RunState& state) {
  const AggregativeProblem& p = *state.problem;
  const Iteration t = state.t;
  const double lambda = state.schedules.lambda.value(t);

  const AgentVectors y_seen = PerceivedTrackers(state, 0.0);
  const AgentVectors psi_seen = PerceivedAggregates(state);
  std::vector<AgentState> next(state.num_agents());
  ForEachAgent(state, [&](int i) {
    const AgentState& a = state.agents[i];
    AgentState& n = next[i];
    const double self = 1.0 + state.w->diagonal(i);
    n.x = p.project(i, a.x - lambda * BaselineDirection(state, i));
    n.psi = self * a.psi + MixNeighbors(*state.w, i, psi_seen) + p.g(i, n.x) -
            p.g(i, a.x);
    n.y = self * a.y + MixNeighbors(*state.w, i, y_seen) +
          p.grad2_f(i, n.x, n.psi) - p.grad2_f(i, a.x, a.psi);
  });
  state.agents.swap(next);
  state.ball.Advance();
  ++state.t;
  CheckDivergence(state);
}

// ---------------------------------------------------------------------------

namespace {

struct CheapMetrics {
  double cost = 0.0;
  double grad_norm_sq = 0.0;
};

CheapMetrics MeasureCheap(const RunState& state, const AgentVectors& x,
                          AgentVectors* grad) {
  CheapMetrics out;
  out.cost = GlobalCost(*state.problem, x);
  *grad = GlobalGradient(*state.problem, x);
  out.grad_norm_sq = SquaredNorm(*grad);
  return out;
}

}  // namespace

RunResult Run(RunState& state, Iteration T, Iteration stride,
              const OracleSolution* oracle) {
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  RunResult result;
  const AggregativeProblem& p = *state.problem;
  const double reference = oracle ? oracle->cost : 0.0;
  double lambda_sum = 0.0;
  double gap_sum = 0.0;
  double grad_sum = 0.0;

  for (;;) {
    const Iteration t = state.t;
    const AgentVectors x = state.Decisions();
    AgentVectors grad;
    const CheapMetrics cheap = MeasureCheap(state, x, &grad);
    const double lambda = state.schedules.lambda.value(t);
    lambda_sum += lambda;
    gap_sum += lambda * (cheap.cost - reference);
    grad_sum += lambda * cheap.grad_norm_sq;
    result.weighted_avg_gap = gap_sum / lambda_sum;
    result.weighted_avg_grad = grad_sum / lambda_sum;

    if (t % stride == 0 || t >= T) {
      MetricsRecord rec;
      rec.t = t;
      rec.cost = cheap.cost;
      rec.gap_f = cheap.cost - reference;
      rec.grad_norm_sq = cheap.grad_norm_sq;
      if (oracle) {
        for (int i = 0; i < p.num_agents(); ++i) {
          const double e = (x[i] - oracle->x[i]).squaredNorm();
          rec.err_x += e;
          rec.err_x_agent_max = std::max(rec.err_x_agent_max, e);
        }
      }
      const Vec phi = Aggregate(p, x);
      Vec y_bar = Vec::Zero(p.aggregate_dim());
      for (const AgentState& a : state.agents) y_bar += a.y;
      y_bar /= state.num_agents();
      for (const AgentState& a : state.agents) {
        rec.psi_consensus += (a.psi - phi).squaredNorm();
        rec.y_consensus += (a.y - y_bar).squaredNorm();
      }
      const AgentVectors estimate =
          state.options.algorithm == Algorithm::kBaseline
              ? GradientEstimate(state, {})
              : GradientEstimate(state, ComputeTrackerUpdate(state));
      rec.grad_est_err = SquaredDistance(estimate, grad);
      rec.weighted_avg_gap = result.weighted_avg_gap;
      rec.weighted_avg_grad = result.weighted_avg_grad;
      result.log.push_back(rec);
    }
    if (t >= T) break;
    Step(state);
    if (state.diverged) {
      result.diverged = true;
      result.diverged_at = state.diverged_at;
      break;
    }
  }
  return result;
}

std::string MetricsCsv(const RunResult& result) {
  std::string out =
      "t,err_x,gap_F,grad_norm_sq,psi_consensus,y_consensus,grad_est_err,"
      "weighted_avg_gap,weighted_avg_grad\n";
  for (const MetricsRecord& r : result.log) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.t, r.err_x, r.gap_f,
                       r.grad_norm_sq, r.psi_consensus, r.y_consensus,
                       r.grad_est_err, r.weighted_avg_gap, r.weighted_avg_grad);
  }
  if (result.diverged) out += fmt::format("# diverged at t={}\n", result.diverged_at);
  return out;
}

}  // namespace tdao
