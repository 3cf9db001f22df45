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

#include "tdao/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "tdao/error.hpp"
#include "tdao/harness/output.hpp"

namespace tdao::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Acceptance threshold for the finite-difference check.
constexpr double kGradcheckTolerance = 1e-5;

EngineOptions Options(const ExperimentConfig& c, Algorithm algorithm, bool noise) {
  EngineOptions o;
  o.algorithm = algorithm;
  o.noise_enabled = noise;
  o.workers = c.workers;
  return o;
}

ScheduleSet BaselineSchedules(const ExperimentConfig& c, const ScheduleSet& noise_from) {
  ScheduleSet s = noise_from;
  s.lambda = DecayProfile{c.baseline_lambda, 0.0};
  return s;
}

RunResult RunOne(const Instance& inst, const ScheduleSet& s, std::uint64_t seed,
                 const ExperimentConfig& c, Algorithm algorithm, bool noise,
                 Iteration T, const OracleSolution* oracle, AgentVectors* final_x = nullptr) {
  RunState state = InitRun(inst.problem, inst.w, s, seed, ParseInitPolicy(c.init),
                           Options(c, algorithm, noise));
  RunResult r = Run(state, T, c.stride, oracle);
  if (final_x) *final_x = state.Decisions();
  return r;
}

std::optional<OracleSolution> SolveOracle(const ExperimentConfig& c, const Instance& inst) {
  const auto* synthetic = dynamic_cast<const SyntheticProblem*>(inst.problem.get());
  if (synthetic && synthetic->params().kind == SyntheticKind::kNonconvex) return std::nullopt;
  return CentralizedOracle(*inst.problem, c.oracle_tol, c.oracle_max_iters);
}

ordered_json OracleJson(const std::optional<OracleSolution>& o) {
  if (!o) return nullptr;
  return {{"cost", o->cost},
          {"iterations", o->iterations},
          {"projected_gradient_norm", o->projected_gradient_norm},
          {"converged", o->converged}};
}

ordered_json Finite(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

RunResult MeanResult(const std::vector<const RunResult*>& runs) {
  RunResult r;
  r.log = MeanLog(runs);
  return r;
}

std::vector<const RunResult*> Pointers(const std::vector<SeedRun>& runs) {
  std::vector<const RunResult*> out;
  for (const auto& s : runs) {
    if (s.error.empty()) out.push_back(&s.result);
  }
  return out;
}

PlotSeries Series(const std::string& label, const std::vector<MetricsRecord>& log,
                  const std::string& metric) {
  PlotSeries s;
  s.label = label;
  for (const auto& r : log) {
    s.x.push_back(static_cast<double>(r.t));
    s.y.push_back(MetricValue(r, metric));
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

InitPolicy ParseInitPolicy(const std::string& s) {
  if (s == "project-zero") return InitPolicy::kProjectZero;
  if (s == "random-feasible") return InitPolicy::kRandomFeasible;
  throw Error(ErrorCode::kConfig, "init must be project-zero or random-feasible");
}

std::shared_ptr<const EvChargingProblem> BuildEvProblem(const ExperimentConfig& c,
                                                        std::vector<fs::path>* inputs) {
  std::vector<EvModel> models = DefaultEvModels();
  Vec demand = DefaultDemandProfile();
  if (!c.ev_models_csv.empty()) {
    models = LoadEvModels(c.ev_models_csv);
    if (inputs) inputs->push_back(c.ev_models_csv);
  }
  if (!c.demand_csv.empty()) {
    demand = LoadDemandProfile(c.demand_csv);
    if (inputs) inputs->push_back(c.demand_csv);
  }
  return std::make_shared<EvChargingProblem>(MakeEvSpec(models, c.ev_per_model, demand));
}

Topology BuildTopology(const ExperimentConfig& c, int agents) {
  if (c.topology == "k-regular") return GenerateKRegular(agents, c.degree, c.graph_seed);
  if (c.topology == "ring") return Topology::Ring(agents);
  if (c.topology == "complete") return Topology::Complete(agents);
  if (c.topology == "edgelist") {
    if (c.edgelist.empty()) throw Error(ErrorCode::kConfig, "topology edgelist needs network.edgelist");
    return ReadEdgeList(c.edgelist, agents);
  }
  throw Error(ErrorCode::kConfig, "unknown topology '" + c.topology + "'");
}

Instance BuildInstance(const ExperimentConfig& c) {
  Instance inst;
  if (c.problem == "ev") {
    inst.ev = BuildEvProblem(c, &inst.inputs);
    inst.problem = inst.ev;
  } else if (c.problem == "synthetic") {
    inst.problem = std::make_shared<SyntheticProblem>(
        MakeSyntheticProblem(ParseSyntheticKind(c.synthetic_kind), c.agents, c.decision_dim,
                             c.aggregate_dim, c.problem_seed));
  } else {
    throw Error(ErrorCode::kConfig, "problem must be synthetic or ev");
  }
  inst.topology = BuildTopology(c, inst.problem->num_agents());
  if (c.topology == "edgelist") inst.inputs.push_back(c.edgelist);
  inst.w = std::make_shared<WeightMatrix>(
      BuildWeightMatrix(inst.topology, c.edge_weight, ParseSpectralPolicy(c.spectral_policy)));
  return inst;
}

void ParallelSeeds(int jobs, int count, const std::function<void(int)>& body) {
  const int threads = std::max(1, std::min(jobs, count));
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&](int first) {
    for (int k = first; k < count; k += threads) {
      try {
        body(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double MetricValue(const MetricsRecord& r, const std::string& metric) {
  if (metric == "err_x") return r.err_x;
  if (metric == "err_x_agent_max") return r.err_x_agent_max;
  if (metric == "cost") return r.cost;
  if (metric == "gap_F") return r.gap_f;
  if (metric == "grad_norm_sq") return r.grad_norm_sq;
  if (metric == "psi_consensus") return r.psi_consensus;
  if (metric == "y_consensus") return r.y_consensus;
  if (metric == "grad_est_err") return r.grad_est_err;
  if (metric == "weighted_avg_gap") return r.weighted_avg_gap;
  if (metric == "weighted_avg_grad") return r.weighted_avg_grad;
  throw Error(ErrorCode::kConfig, "unknown metric '" + metric + "'");
}

double FitLogLogSlope(const std::vector<MetricsRecord>& log, const std::string& metric,
                      double t_lo, double t_hi) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : log) {
    const double t = static_cast<double>(r.t);
    const double y = MetricValue(r, metric);
    if (t < t_lo || t > t_hi || t <= 0.0 || !(y > 0.0) || !std::isfinite(y)) continue;
    const double lx = std::log(t), ly = std::log(y);
    n += 1;
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || den <= 0.0) return kNaN;
  return (n * sxy - sx * sy) / den;
}

std::vector<MetricsRecord> MeanLog(const std::vector<const RunResult*>& runs) {
  std::size_t rows = 0;
  for (const auto* r : runs) rows = std::max(rows, r->log.size());
  std::vector<MetricsRecord> out;
  for (std::size_t k = 0; k < rows; ++k) {
    MetricsRecord m;
    int n = 0;
    for (const auto* r : runs) {
      if (k >= r->log.size()) continue;
      const MetricsRecord& s = r->log[k];
      m.t = s.t;
      m.err_x += s.err_x;
      m.err_x_agent_max += s.err_x_agent_max;
      m.cost += s.cost;
      m.gap_f += s.gap_f;
      m.grad_norm_sq += s.grad_norm_sq;
      m.psi_consensus += s.psi_consensus;
      m.y_consensus += s.y_consensus;
      m.grad_est_err += s.grad_est_err;
      m.weighted_avg_gap += s.weighted_avg_gap;
      m.weighted_avg_grad += s.weighted_avg_grad;
      ++n;
    }
    const double inv = 1.0 / n;
    m.err_x *= inv;
    m.err_x_agent_max *= inv;
    m.cost *= inv;
    m.gap_f *= inv;
    m.grad_norm_sq *= inv;
    m.psi_consensus *= inv;
    m.y_consensus *= inv;
    m.grad_est_err *= inv;
    m.weighted_avg_gap *= inv;
    m.weighted_avg_grad *= inv;
    out.push_back(m);
  }
  return out;
}

double MetricAt(const RunResult& run, const std::string& metric, Iteration t) {
  double v = kNaN;
  for (const auto& r : run.log) {
    if (r.t > t) break;
    v = MetricValue(r, metric);
  }
  return v;
}

double Median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

ConvergenceSummary RunConvergence(const ExperimentConfig& c, const Instance& inst) {
  ConvergenceSummary out;
  out.oracle = SolveOracle(c, inst);
  out.regime = CheckRegime(c.schedules, ParseRegime(c.regime), inst.problem->num_agents(),
                           inst.w->w_hat());
  out.metric = out.oracle ? c.metric : "grad_norm_sq";
  const OracleSolution* oracle = out.oracle ? &*out.oracle : nullptr;

  out.runs.resize(c.seeds.size());
  ParallelSeeds(c.jobs, static_cast<int>(c.seeds.size()), [&](int k) {
    SeedRun& s = out.runs[k];
    s.seed = c.seeds[k];
    try {
      s.result = RunOne(inst, c.schedules, s.seed, c, Algorithm::kTruthful, c.noise, c.T, oracle);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
  });

  const auto ok = Pointers(out.runs);
  out.failed_seeds = static_cast<int>(out.runs.size() - ok.size());
  out.mean = MeanLog(ok);
  out.slope = FitLogLogSlope(out.mean, out.metric, c.T / 10.0, static_cast<double>(c.T));
  out.final_metric = out.mean.empty() ? kNaN : MetricValue(out.mean.back(), out.metric);
  for (const auto* r : ok) {
    out.weighted_avg_gap += r->weighted_avg_gap / ok.size();
    out.weighted_avg_grad += r->weighted_avg_grad / ok.size();
  }
  return out;
}

RobustnessSummary RunRobustness(const ExperimentConfig& c, const Instance& inst) {
  RobustnessSummary out;
  out.oracle = SolveOracle(c, inst);
  const OracleSolution* oracle = out.oracle ? &*out.oracle : nullptr;
  const std::string metric = oracle ? c.metric : "grad_norm_sq";
  const ScheduleSet base = BaselineSchedules(c, c.schedules);
  const Iteration T = std::max(c.T, c.late_t);

  auto verdict = [&](const RunResult& r, double* ratio) {
    const double early = MetricAt(r, metric, c.early_t);
    const double late = MetricAt(r, metric, c.late_t);
    *ratio = late / early;
    if (r.diverged && r.diverged_at <= c.late_t) return true;
    // Divergence signature: the error grew between the two checkpoints.
    return !std::isfinite(late) || late > early || *ratio > c.ratio_threshold;
  };

  out.runs.resize(c.seeds.size());
  ParallelSeeds(c.jobs, static_cast<int>(c.seeds.size()), [&](int k) {
    RobustnessSeed& s = out.runs[k];
    s.seed = c.seeds[k];
    s.alg1 = RunOne(inst, c.schedules, s.seed, c, Algorithm::kTruthful, true, T, oracle);
    s.baseline = RunOne(inst, base, s.seed, c, Algorithm::kBaseline, true, T, oracle);
    s.divergent_alg1 = verdict(s.alg1, &s.ratio_alg1);
    s.divergent_baseline = verdict(s.baseline, &s.ratio_baseline);
  });
  for (const auto& s : out.runs) {
    out.divergent_alg1 += s.divergent_alg1;
    out.divergent_baseline += s.divergent_baseline;
    out.separated += s.divergent_baseline && !s.divergent_alg1;
  }

  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  out.clean_alg1 = RunOne(inst, c.schedules, seed, c, Algorithm::kTruthful, false, T, oracle);
  out.clean_baseline = RunOne(inst, base, seed, c, Algorithm::kBaseline, false, T, oracle);
  if (!out.clean_alg1.log.empty() && !out.clean_baseline.log.empty()) {
    const double fa = out.clean_alg1.log.back().cost;
    const double fb = out.clean_baseline.log.back().cost;
    out.clean_final_rel_diff = std::abs(fa - fb) / std::abs(fb);
  }
  out.pass = !out.runs.empty() && 5 * out.separated >= 4 * static_cast<int>(out.runs.size());
  return out;
}

// ---------------------------------------------------------------------------

Vec ShiftDemand(const Vec& demand, int pivot, double fraction) {
  const int K = static_cast<int>(demand.size());
  if (pivot < 1 || pivot >= K) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("pivot {} outside [1, {})", pivot, K));
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "shift fraction must lie in [0, 1]");
  }
  Vec out = demand;
  const double moved = fraction * demand.head(pivot).sum();
  out.head(pivot) *= 1.0 - fraction;
  out.tail(K - pivot).array() += moved / (K - pivot);
  return out;
}

AdjacentScenario GroupScenario(const EvChargingProblem& p, int group, int per_model,
                               int pivot, double fraction) {
  const int m = p.num_agents();
  if (per_model < 1 || group < 1 || group * per_model > m) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("group {} of size {} does not fit {} agents", group, per_model, m));
  }
  AdjacentScenario s;
  for (int k = 0; k < per_model; ++k) {
    const int i = (group - 1) * per_model + k;
    s.agents.push_back(i);
    s.reported_demand.push_back(ShiftDemand(p.spec().demand[i], pivot, fraction));
  }
  return s;
}

EvChargingProblem ApplyScenario(const EvChargingProblem& p, const AdjacentScenario& s) {
  EvChargingProblem out = p;
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    out = out.WithDemand(s.agents[k], s.reported_demand[k]);
  }
  return out;
}

double TrueCost(const EvChargingProblem& truth, const AgentVectors& x, int i) {
  return truth.f(i, x[i], Aggregate(truth, x));
}

AgentVectors BestResponse(const EvChargingProblem& truth, AgentVectors x,
                          const std::vector<int>& agents, int rounds) {
  // Agent i's cost sum_k p(phi_k) (x_k + d_k) is separable and convex in its
  // own slots because phi = rest + (x^i + d^i) / C_tot. The minimizer over
  // {0 <= x <= x_max, 1^T x = E} equalizes the slot derivatives at a level
  // theta, found by nested bisection.
  const double inv_m = 1.0 / truth.num_agents();
  const double coupling = inv_m * truth.scale();
  for (int round = 0; round < rounds; ++round) {
    for (int i : agents) {
      const Vec& d = truth.spec().demand[i];
      const Vec& cap = truth.spec().max_rate[i];
      const double energy = truth.spec().energy[i];
      const Vec rest = Aggregate(truth, x) - inv_m * truth.g(i, x[i]);
      auto slope = [&](const Vec& z) -> Vec {
        const Vec phi = rest + coupling * (z + d);
        return truth.Price(phi) + coupling * truth.PriceSlope(phi).cwiseProduct(z + d);
      };
      auto level = [&](double theta) {
        Vec lo = Vec::Zero(cap.size());
        Vec hi = cap;
        for (int it = 0; it < 100; ++it) {
          const Vec mid = 0.5 * (lo + hi);
          const Vec dm = slope(mid);
          for (int k = 0; k < mid.size(); ++k) (dm(k) < theta ? lo(k) : hi(k)) = mid(k);
        }
        return Vec(0.5 * (lo + hi));
      };
      double t_lo = slope(Vec::Zero(cap.size())).minCoeff() - 1.0;
      double t_hi = slope(cap).maxCoeff() + 1.0;
      for (int it = 0; it < 200 && t_hi - t_lo > 1e-15 * std::abs(t_hi); ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        (level(mid).sum() < energy ? t_lo : t_hi) = mid;
      }
      // Exact budget: the projection absorbs the residual of the bisection.
      x[i] = truth.project(i, level(0.5 * (t_lo + t_hi)));
    }
  }
  return x;
}

TruthfulnessSummary RunTruthfulness(const ExperimentConfig& c, const Instance& inst) {
  if (!inst.ev) throw Error(ErrorCode::kConfig, "truthfulness needs problem.type = ev");
  TruthfulnessSummary out;
  const EvChargingProblem& truth = *inst.ev;
  out.scenario = GroupScenario(truth, c.group, c.ev_per_model, c.pivot_slot, c.shift_fraction);
  Instance lied = inst;
  lied.ev = std::make_shared<EvChargingProblem>(ApplyScenario(truth, out.scenario));
  lied.problem = lied.ev;

  const int m = truth.num_agents();
  out.privacy = Epsilon(c.T, c.truthful_schedules, inst.w->w_hat(), m);
  out.eta = Eta(out.privacy.epsilon, truth.constants());
  const ScheduleSet naive = BaselineSchedules(c, c.truthful_schedules);
  const auto& liars = out.scenario.agents;

  auto finish = [&](AgentVectors x) {
    if (c.charging_rule == ChargingRule::kBestResponse) x = BestResponse(truth, std::move(x), liars);
    return x;
  };

  out.runs.resize(c.seeds.size());
  std::vector<AgentVectors> naive_p(c.seeds.size()), naive_q(c.seeds.size());
  ParallelSeeds(c.jobs, static_cast<int>(c.seeds.size()), [&](int k) {
    TruthfulnessSeed& s = out.runs[k];
    s.seed = c.seeds[k];
    AgentVectors ap, aq, np, nq;
    RunOne(inst, c.truthful_schedules, s.seed, c, Algorithm::kTruthful, c.noise, c.T, nullptr, &ap);
    RunOne(lied, c.truthful_schedules, s.seed, c, Algorithm::kTruthful, c.noise, c.T, nullptr, &aq);
    RunOne(inst, naive, s.seed, c, Algorithm::kBaseline, false, c.T, nullptr, &np);
    RunOne(lied, naive, s.seed, c, Algorithm::kBaseline, false, c.T, nullptr, &nq);
    naive_p[k] = np;
    naive_q[k] = nq;
    ap = finish(std::move(ap));
    aq = finish(std::move(aq));
    np = finish(std::move(np));
    nq = finish(std::move(nq));
    for (int i : liars) {
      s.agent_gain_alg1.push_back(TrueCost(truth, ap, i) - TrueCost(truth, aq, i));
      s.agent_gain_naive.push_back(TrueCost(truth, np, i) - TrueCost(truth, nq, i));
    }
    for (std::size_t j = 0; j < liars.size(); ++j) {
      s.gain_alg1 += s.agent_gain_alg1[j] / liars.size();
      s.gain_naive += s.agent_gain_naive[j] / liars.size();
    }
    s.global_inflation = GlobalCost(truth, aq) - GlobalCost(truth, ap);
  });

  if (!c.seeds.empty()) {
    for (int i : liars) {
      out.naive_x_p.push_back(naive_p.front()[i]);
      out.naive_x_p_prime.push_back(naive_q.front()[i]);
    }
  }
  std::vector<double> ga, gn;
  out.max_agent_gain_alg1 = -std::numeric_limits<double>::infinity();
  for (const auto& s : out.runs) {
    ga.push_back(s.gain_alg1);
    gn.push_back(s.gain_naive);
    for (double g : s.agent_gain_alg1) out.max_agent_gain_alg1 = std::max(out.max_agent_gain_alg1, g);
  }
  out.median_gain_alg1 = Median(ga);
  out.median_gain_naive = Median(gn);
  out.bounded = out.max_agent_gain_alg1 <= out.eta.eta;
  out.ordered = out.median_gain_alg1 < out.median_gain_naive;
  return out;
}

// ---------------------------------------------------------------------------

GradcheckSummary RunGradcheck(const ExperimentConfig& c, const AggregativeProblem& p) {
  GradcheckSummary out;
  std::mt19937_64 rng(c.problem_seed ^ 0x6772616463686bULL);
  std::uniform_real_distribution<double> shrink(0.5, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.2);
  const bool ev = dynamic_cast<const EvChargingProblem*>(&p) != nullptr;
  const int m = p.num_agents();
  for (int k = 0; k < c.gradcheck_points; ++k) {
    AgentVectors x(m), psi(m);
    for (int i = 0; i < m; ++i) x[i] = p.interior_point(i, rng());
    const Vec phi = Aggregate(p, x);
    for (int i = 0; i < m; ++i) {
      psi[i] = phi;
      for (int j = 0; j < phi.size(); ++j) {
        // EV loads stay inside (0, knee] where the price is smooth.
        psi[i](j) = ev ? phi(j) * shrink(rng) : phi(j) + jitter(rng);
      }
    }
    const FiniteDiffReport r = FiniteDiffCheck(p, x, psi, c.gradcheck_h);
    if (out.worst.component.empty() || r.max_rel_error > out.worst.max_rel_error) out.worst = r;
    ++out.points;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Writer {
  fs::path dir;
  std::vector<fs::path> files;

  void Put(const std::string& name, const std::string& content) {
    WriteTextFile(dir / name, content);
    files.push_back(name);
  }
};

ordered_json RegimeJson(const RegimeConditions& r) {
  ordered_json j;
  j["regime"] = std::string(RegimeName(r.regime));
  j["passes"] = r.passes();
  j["failures"] = r.failures();
  return j;
}

ordered_json CertificateJson(const SpectralCertificate& cert) {
  ordered_json j;
  j["eigenvalues"] = cert.eigenvalues;
  j["delta2"] = cert.delta2;
  j["w_hat"] = cert.w_hat;
  j["violations"] = cert.violations;
  return j;
}

ExperimentOutcome DoConvergence(const ExperimentConfig& c, Writer& out) {
  const Instance inst = BuildInstance(c);
  const ConvergenceSummary s = RunConvergence(c, inst);
  for (const auto& run : s.runs) {
    if (run.error.empty()) out.Put(fmt::format("metrics_seed{}.csv", run.seed), MetricsCsv(run.result));
  }
  out.Put("metrics.csv", MetricsCsv(MeanResult(Pointers(s.runs))));
  PlotSpec plot;
  plot.title = fmt::format("{} on {} (seed mean)", s.metric, inst.problem->name());
  plot.y_label = s.metric;
  plot.log_x = plot.log_y = true;
  plot.series.push_back(Series("Algorithm 1", s.mean, s.metric));
  out.Put("curve.svg", RenderSvg(plot));

  ordered_json j;
  j["kind"] = "convergence";
  j["metric"] = s.metric;
  j["slope_window"] = {c.T / 10, c.T};
  j["slope"] = Finite(s.slope);
  j["final_metric"] = Finite(s.final_metric);
  j["weighted_avg_gap"] = Finite(s.weighted_avg_gap);
  j["weighted_avg_grad"] = Finite(s.weighted_avg_grad);
  j["failed_seeds"] = s.failed_seeds;
  ordered_json errors = ordered_json::object();
  for (const auto& run : s.runs) {
    if (!run.error.empty()) errors[std::to_string(run.seed)] = run.error;
  }
  j["seed_errors"] = errors;
  j["oracle"] = OracleJson(s.oracle);
  j["regime"] = RegimeJson(s.regime);
  j["spectral"] = CertificateJson(inst.w->certificate());
  WriteManifest(out.dir, c, inst.inputs, out.files, j.dump());

  ExperimentOutcome o;
  o.exit_code = s.failed_seeds == 0 ? kExitOk : kExitAssertion;
  o.message = fmt::format("convergence: final {} = {:.6g}, slope over [{}, {}] = {:.4f}, failed seeds {}",
                          s.metric, s.final_metric, c.T / 10, c.T, s.slope, s.failed_seeds);
  return o;
}

ExperimentOutcome DoRobustness(const ExperimentConfig& c, Writer& out) {
  const Instance inst = BuildInstance(c);
  const RobustnessSummary s = RunRobustness(c, inst);
  const std::string metric = s.oracle ? c.metric : "grad_norm_sq";
  std::string table = "seed,ratio_alg1,ratio_baseline,divergent_alg1,divergent_baseline,baseline_diverged_at\n";
  std::vector<const RunResult*> a, b;
  for (const auto& r : s.runs) {
    table += fmt::format("{},{},{},{},{},{}\n", r.seed, r.ratio_alg1, r.ratio_baseline,
                         int(r.divergent_alg1), int(r.divergent_baseline), r.baseline.diverged_at);
    out.Put(fmt::format("alg1_seed{}.csv", r.seed), MetricsCsv(r.alg1));
    out.Put(fmt::format("baseline_seed{}.csv", r.seed), MetricsCsv(r.baseline));
    a.push_back(&r.alg1);
    b.push_back(&r.baseline);
  }
  out.Put("robustness.csv", table);
  out.Put("clean_alg1.csv", MetricsCsv(s.clean_alg1));
  out.Put("clean_baseline.csv", MetricsCsv(s.clean_baseline));
  PlotSpec plot;
  plot.title = fmt::format("{} under identical noise", metric);
  plot.y_label = metric;
  plot.log_x = plot.log_y = true;
  plot.series.push_back(Series("Algorithm 1", MeanLog(a), metric));
  plot.series.push_back(Series("baseline", MeanLog(b), metric));
  plot.series.push_back(Series("Algorithm 1, no noise", s.clean_alg1.log, metric));
  plot.series.push_back(Series("baseline, no noise", s.clean_baseline.log, metric));
  out.Put("overlay.svg", RenderSvg(plot));

  ordered_json j;
  j["kind"] = "robustness";
  j["metric"] = metric;
  j["seeds"] = s.runs.size();
  j["divergent_alg1"] = s.divergent_alg1;
  j["divergent_baseline"] = s.divergent_baseline;
  j["separated"] = s.separated;
  j["clean_final_rel_diff"] = Finite(s.clean_final_rel_diff);
  j["pass"] = s.pass;
  j["oracle"] = OracleJson(s.oracle);
  WriteManifest(out.dir, c, inst.inputs, out.files, j.dump());

  ExperimentOutcome o;
  o.exit_code = s.pass ? kExitExpectedDivergence : kExitAssertion;
  o.message = fmt::format(
      "robustness: baseline divergent on {}/{} seeds, Algorithm 1 on {}/{}; "
      "noise-free final F differ by {:.3g} (relative)",
      s.divergent_baseline, s.runs.size(), s.divergent_alg1, s.runs.size(), s.clean_final_rel_diff);
  return o;
}

ExperimentOutcome DoTruthfulness(const ExperimentConfig& c, Writer& out) {
  const Instance inst = BuildInstance(c);
  const TruthfulnessSummary s = RunTruthfulness(c, inst);
  std::string gains = "seed,gain_alg1,gain_naive,eta,global_inflation\n";
  std::string agents = "seed,agent,gain_alg1,gain_naive\n";
  for (const auto& r : s.runs) {
    gains += fmt::format("{},{},{},{},{}\n", r.seed, r.gain_alg1, r.gain_naive, s.eta.eta,
                         r.global_inflation);
    for (std::size_t k = 0; k < s.scenario.agents.size(); ++k) {
      agents += fmt::format("{},{},{},{}\n", r.seed, s.scenario.agents[k], r.agent_gain_alg1[k],
                            r.agent_gain_naive[k]);
    }
  }
  out.Put("gains.csv", gains);
  out.Put("gains_agents.csv", agents);

  std::string sched = "slot,naive_truthful,naive_untruthful,reported_demand_shift\n";
  PlotSpec plot;
  plot.title = "misreporting group, noise-free conventional schedule";
  plot.x_label = "slot";
  plot.y_label = "mean charging rate (kW)";
  PlotSeries sp{"truthful report", {}, {}}, sq{"untruthful report", {}, {}};
  if (!s.naive_x_p.empty()) {
    const int K = static_cast<int>(s.naive_x_p.front().size());
    const int i0 = s.scenario.agents.front();
    for (int k = 0; k < K; ++k) {
      double vp = 0, vq = 0;
      for (std::size_t a = 0; a < s.naive_x_p.size(); ++a) {
        vp += s.naive_x_p[a](k) / s.naive_x_p.size();
        vq += s.naive_x_p_prime[a](k) / s.naive_x_p.size();
      }
      const double shift = s.scenario.reported_demand.front()(k) - inst.ev->spec().demand[i0](k);
      sched += fmt::format("{},{},{},{}\n", k, vp, vq, shift);
      sp.x.push_back(k);
      sp.y.push_back(vp);
      sq.x.push_back(k);
      sq.y.push_back(vq);
    }
  }
  plot.series = {sp, sq};
  out.Put("schedules.csv", sched);
  out.Put("schedules.svg", RenderSvg(plot));

  ordered_json j;
  j["kind"] = "truthfulness";
  j["agents"] = s.scenario.agents;
  j["charging_rule"] = ChargingRuleName(c.charging_rule);
  j["epsilon"] = s.privacy.epsilon;
  j["eta"] = s.eta.eta;
  j["eta_intrinsic"] = s.eta.intrinsic;
  j["eta_privacy"] = s.eta.privacy;
  j["epsilon_at_least_one"] = s.eta.linearization_exceeded;
  j["median_gain_alg1"] = s.median_gain_alg1;
  j["median_gain_naive"] = s.median_gain_naive;
  j["max_agent_gain_alg1"] = s.max_agent_gain_alg1;
  j["bounded"] = s.bounded;
  j["ordered"] = s.ordered;
  WriteManifest(out.dir, c, inst.inputs, out.files, j.dump());

  ExperimentOutcome o;
  o.exit_code = s.bounded && s.ordered ? kExitOk : kExitAssertion;
  o.message = fmt::format(
      "truthfulness: median gain Algorithm 1 {:.6g}, conventional {:.6g}; max agent gain {:.6g} "
      "vs eta {:.6g} (epsilon {:.6g}{})",
      s.median_gain_alg1, s.median_gain_naive, s.max_agent_gain_alg1, s.eta.eta,
      s.privacy.epsilon, s.eta.linearization_exceeded ? ", epsilon >= 1" : "");
  return o;
}

ExperimentOutcome DoPrivacy(const ExperimentConfig& c, Writer& out) {
  const Instance inst = BuildInstance(c);
  const int m = inst.problem->num_agents();
  const double w_hat = inst.w->w_hat();
  const ScheduleSet& s = c.schedules;
  const RegimeConditions regime = CheckRegime(s, Regime::kT2Truthful, m, w_hat);
  if (!regime.passes()) {
    ExperimentOutcome o;
    o.exit_code = kExitAssertion;
    o.message = "privacy-report: truthful regime violated: ";
    for (const auto& f : regime.failures()) o.message += f + "; ";
    return o;
  }
  const PrivacyReport rep = Epsilon(c.privacy_T, s, w_hat, m);
  const PrivacyReport inf = Epsilon(kInfiniteHorizon, s, w_hat, m);
  const EtaReport eta = Eta(rep.epsilon, inst.problem->constants());

  std::string csv = "t,term_psi,term_y,epsilon\n";
  const Iteration horizon = c.privacy_T == kInfiniteHorizon ? 1000000 : c.privacy_T;
  double cum = 0.0;
  Iteration next = 1;
  for (Iteration t = 1; t <= horizon; ++t) {
    const EpsilonTerm term = EpsilonTermAt(t, s, w_hat, m);
    cum += term.psi + term.y;
    if (t == next || t == horizon) {
      csv += fmt::format("{},{},{},{}\n", t, term.psi, term.y, cum);
      next = std::max(next + 1, static_cast<Iteration>(std::ceil(next * 1.25)));
    }
  }
  out.Put("privacy.csv", csv);

  ordered_json j;
  j["kind"] = "privacy-report";
  j["T"] = rep.T;
  j["epsilon"] = rep.epsilon;
  j["epsilon_psi"] = rep.epsilon_psi;
  j["epsilon_y"] = rep.epsilon_y;
  j["epsilon_infinite"] = inf.epsilon;
  j["infinite_partial_sum"] = inf.partial_sum;
  j["infinite_partial_terms"] = inf.partial_terms;
  j["infinite_tail_bound"] = inf.tail_bound;
  j["c1"] = rep.c1;
  j["c2"] = rep.c2;
  j["w_hat"] = rep.w_hat;
  j["exponent_psi"] = rep.exponent_psi;
  j["exponent_y"] = rep.exponent_y;
  j["limiting_agent_xi"] = rep.limiting_agent_xi;
  j["limiting_agent_zeta"] = rep.limiting_agent_zeta;
  j["eta"] = eta.eta;
  j["epsilon_at_least_one"] = eta.linearization_exceeded;
  try {
    const NoiseCalibration cal = CalibrateNoise(c.target_epsilon, c.privacy_T, s, w_hat, m);
    j["calibrated_sigma_xi"] = cal.sigma_xi;
    j["calibrated_sigma_zeta"] = cal.sigma_zeta;
  } catch (const Error& e) {
    j["calibration_error"] = e.what();
  }
  WriteManifest(out.dir, c, inst.inputs, out.files, j.dump());

  ExperimentOutcome o;
  o.message = fmt::format(
      "privacy-report: epsilon(T={}) = {:.12g} (psi {:.6g}, y {:.6g}); epsilon(inf) = {:.12g}; "
      "exponents p = {:.4g}, q = {:.4g}; eta = {:.6g}{}",
      c.privacy_T == kInfiniteHorizon ? std::string("inf") : std::to_string(c.privacy_T),
      rep.epsilon, rep.epsilon_psi, rep.epsilon_y, inf.epsilon, rep.exponent_psi, rep.exponent_y,
      eta.eta, eta.linearization_exceeded ? " (epsilon >= 1: eta uses the small-epsilon form)" : "");
  return o;
}

ExperimentOutcome DoGradcheck(const ExperimentConfig& c, Writer& out) {
  const Instance inst = BuildInstance(c);
  const GradcheckSummary s = RunGradcheck(c, *inst.problem);
  out.Put("gradcheck.csv",
          fmt::format("problem,points,h,max_rel_error,component,agent,coordinate\n{},{},{},{},{},{},{}\n",
                      inst.problem->name(), s.points, c.gradcheck_h, s.worst.max_rel_error,
                      s.worst.component, s.worst.agent, s.worst.coordinate));
  ordered_json j;
  j["kind"] = "gradcheck";
  j["max_rel_error"] = s.worst.max_rel_error;
  WriteManifest(out.dir, c, inst.inputs, out.files, j.dump());
  ExperimentOutcome o;
  o.exit_code = s.worst.max_rel_error < kGradcheckTolerance ? kExitOk : kExitAssertion;
  o.message = fmt::format("gradcheck: {} at {} points, max relative error {:.3e} ({} agent {} coord {})",
                          inst.problem->name(), s.points, s.worst.max_rel_error, s.worst.component,
                          s.worst.agent, s.worst.coordinate);
  return o;
}

ExperimentOutcome DoValidateGraph(const ExperimentConfig& c, Writer& out) {
  std::vector<fs::path> inputs;
  int agents = c.agents;
  if (c.problem == "ev") agents = BuildEvProblem(c)->num_agents();
  Topology topo;
  if (c.topology == "edgelist") {
    topo = ReadEdgeList(c.edgelist);
    inputs.push_back(c.edgelist);
  } else {
    topo = BuildTopology(c, agents);
  }
  ExperimentOutcome o;
  if (!topo.IsConnected()) {
    o.exit_code = kExitAssertion;
    o.message = "validate-graph: topology is disconnected";
    return o;
  }
  const WeightMatrix w = BuildWeightMatrix(topo, c.edge_weight, SpectralPolicy::kReport);
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("{}: {}", out.dir.string(), ec.message()));
  const SpectralCertificate& cert = w.certificate();
  WriteEdgeList(topo, out.dir / "edges.txt");
  out.files.push_back("edges.txt");
  WriteWeightCsv(w, out.dir / "weights.csv");
  out.files.push_back("weights.csv");
  ordered_json j = CertificateJson(cert);
  j["kind"] = "validate-graph";
  j["agents"] = topo.size();
  j["edges"] = topo.edges().size();
  WriteManifest(out.dir, c, inputs, out.files, j.dump());
  o.exit_code = cert.ok() ? kExitOk : kExitAssertion;
  o.message = fmt::format("validate-graph: {} agents, {} edges, delta2 = {:.6g}, delta_m = {:.6g}, w_hat = {:.6g}",
                          topo.size(), topo.edges().size(), cert.delta2,
                          cert.eigenvalues.empty() ? kNaN : cert.eigenvalues.back(), cert.w_hat);
  for (const auto& v : cert.violations) o.message += "\n  violation: " + v;
  return o;
}

}  // namespace

ExperimentOutcome RunExperiment(const ExperimentConfig& c) {
  Writer out{ResolveOutputDir(c), {}};
  ExperimentOutcome o;
  if (c.kind == "convergence") {
    o = DoConvergence(c, out);
  } else if (c.kind == "robustness") {
    o = DoRobustness(c, out);
  } else if (c.kind == "truthfulness") {
    o = DoTruthfulness(c, out);
  } else if (c.kind == "privacy-report") {
    o = DoPrivacy(c, out);
  } else if (c.kind == "gradcheck") {
    o = DoGradcheck(c, out);
  } else if (c.kind == "validate-graph") {
    o = DoValidateGraph(c, out);
  } else {
    throw Error(ErrorCode::kConfig, "unknown experiment kind '" + c.kind + "'");
  }
  for (const auto& f : out.files) o.files.push_back(out.dir / f);
  o.files.push_back(out.dir / "manifest.json");
  return o;
}

}  // namespace tdao::harness
