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

// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracles.hpp"
#include "tdao/engine.hpp"
#include "tdao/harness/config.hpp"
#include "tdao/harness/experiments.hpp"
#include "tdao/harness/output.hpp"
#include "tdao/privacy.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tdao;
using namespace tdao::harness;

struct Verdict {
  Verdict() = default;
  Verdict(bool p, std::string d) : pass(p), detail(std::move(d)) {}

  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

ExperimentConfig Config(const std::string& name) {
  return LoadConfig(fs::path(TDAO_TEST_CONFIG_DIR) / name);
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "tdao_acceptance" / name;
  fs::remove_all(p);
  return p;
}

// Noise-free conservation on the EV instance, checked at every iteration.
Verdict Criterion1() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = Config("robustness.ini");
  c.noise = false;
  const Instance inst = BuildInstance(c);
  EngineOptions o;
  o.noise_enabled = false;
  RunState s = InitRun(inst.problem, inst.w, c.schedules, 1, InitPolicy::kProjectZero, o);
  const AggregativeProblem& p = *inst.problem;
  const int m = s.num_agents(), d = p.aggregate_dim();
  double worst_psi = 0.0, worst_y = 0.0;
  auto psi_gap = [&] {
    Vec diff = Vec::Zero(d);
    for (int i = 0; i < m; ++i) diff += s.agents[i].psi - p.g(i, s.agents[i].x);
    return diff.cwiseAbs().maxCoeff();
  };
  worst_psi = psi_gap();
  for (Iteration it = 0; it < 10000; ++it) {
    Vec ybar = Vec::Zero(d), drift = Vec::Zero(d);
    for (int i = 0; i < m; ++i) {
      ybar += s.agents[i].y / m;
      drift += p.grad2_f(i, s.agents[i].x, s.agents[i].psi) / m;
    }
    const double g1 = s.schedules.gamma1.value(s.t);
    Step(s);
    Vec ynext = Vec::Zero(d);
    for (int i = 0; i < m; ++i) ynext += s.agents[i].y / m;
    worst_y = std::max(worst_y, (ynext - ybar - g1 * drift).norm());
    worst_psi = std::max(worst_psi, psi_gap());
  }
  const double secs = Seconds(start);
  return {worst_psi <= 1e-8 && worst_y <= 1e-9 && secs < 30.0,
          fmt::format("max |1'psi - 1'g| = {:.3e} (<= 1e-8), max ybar drift error = {:.3e} "
                      "(<= 1e-9), {:.1f} s (< 30 s)",
                      worst_psi, worst_y, secs)};
}

Verdict Criterion2() {
  const ExperimentConfig c = Config("robustness.ini");
  const Instance inst = BuildInstance(c);
  const double lf2 = inst.problem->constants().lf2;
  double worst = -1e300;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    RunState s = InitRun(inst.problem, inst.w, c.schedules, seed, InitPolicy::kProjectZero);
    for (Iteration it = 0; it < 1000; ++it) {
      Step(s);
      const double r = BallRadius(s.schedules.gamma1, lf2, s.t);
      for (const AgentState& a : s.agents) worst = std::max(worst, a.y.norm() - r);
    }
  }
  return {worst <= 1e-9,
          fmt::format("max_(seed,t<=1000,i) ||y|| - radius(t) = {:.3e} (<= 1e-9)", worst)};
}

Verdict Criterion3() {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = Config("convergence_sc_clean.ini");
  const ConvergenceSummary s = RunConvergence(c, BuildInstance(c));
  const double secs = Seconds(start);
  const double err = s.runs.at(0).result.log.back().err_x;
  return {s.failed_seeds == 0 && err <= 1e-6 && secs < 60.0 && c.T == 50000,
          fmt::format("||x_T - x*||^2 = {:.3e} at T = {} (<= 1e-6), {:.1f} s (< 60 s)", err,
                      c.T, secs)};
}

Verdict Criterion4() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = Config("convergence_sc.ini");
  c.jobs = 5;
  const ConvergenceSummary s = RunConvergence(c, BuildInstance(c));
  const double secs = Seconds(start);
  return {s.failed_seeds == 0 && s.slope <= -1.0 && secs < 600.0,
          fmt::format("seed-mean log-log slope over [{}, {}] = {:.3f} (<= -1.0), {} seeds, "
                      "{:.1f} s (< 600 s)",
                      c.T / 10, c.T, s.slope, s.runs.size(), secs)};
}

Verdict Criterion5() {
  Verdict v{true, ""};
  double worst = 0.0;
  for (const char* name : {"gradcheck_ev.ini", "gradcheck_strongly-convex.ini",
                           "gradcheck_convex.ini", "gradcheck_nonconvex.ini"}) {
    const ExperimentConfig c = Config(name);
    const Instance inst = BuildInstance(c);
    const GradcheckSummary g = RunGradcheck(c, *inst.problem);
    const bool ok = g.points == 20 && g.worst.max_rel_error < 1e-5;
    v.pass = v.pass && ok;
    worst = std::max(worst, g.worst.max_rel_error);
    v.notes.push_back(fmt::format("{}: {} points, max rel error {:.3e} ({} agent {} coord {})",
                                  inst.problem->name(), g.points, g.worst.max_rel_error,
                                  g.worst.component, g.worst.agent, g.worst.coordinate));
  }
  v.detail = fmt::format("max relative error over 4 problems = {:.3e} (< 1e-5)", worst);
  return v;
}

Verdict Criterion6() {
  const ExperimentConfig c = Config("robustness.ini");
  const RobustnessSummary s = RunRobustness(c, BuildInstance(c));
  Verdict v{s.pass, fmt::format("baseline divergent and Algorithm 1 not on {}/{} seeds (>= 4); "
                                "baseline divergent {}, Algorithm 1 divergent {}",
                                s.separated, s.runs.size(), s.divergent_baseline,
                                s.divergent_alg1)};
  for (const RobustnessSeed& r : s.runs) {
    v.notes.push_back(fmt::format("seed {}: ratio baseline {:.3g}{}, Algorithm 1 {:.3g}{}", r.seed,
                                  r.ratio_baseline, r.divergent_baseline ? " (divergent)" : "",
                                  r.ratio_alg1, r.divergent_alg1 ? " (divergent)" : ""));
  }
  return v;
}

Verdict Criterion7() {
  const ExperimentConfig c = Config("privacy.ini");
  const Instance inst = BuildInstance(c);
  const int m = inst.problem->num_agents();
  const double w_hat = inst.w->w_hat();
  const ScheduleSet& s = c.schedules;

  const double eps4 = Epsilon(10000, s, w_hat, m).epsilon;
  const double ref = static_cast<double>(testing::BigEpsilon(s, w_hat, 10000));
  const double rel = std::abs(eps4 - ref) / ref;
  const bool a = rel <= 1e-9;

  const double eps6 = Epsilon(1000000, s, w_hat, m).epsilon;
  const double growth = (eps6 - eps4) / eps4;
  const bool b = growth < 0.01;

  const NoiseCalibration cal = CalibrateNoise(c.target_epsilon, 10000, s, w_hat, m);
  ScheduleSet calibrated = s;
  calibrated.noise.xi.base = cal.sigma_xi;
  calibrated.noise.zeta.base = cal.sigma_zeta;
  const double back = Epsilon(10000, calibrated, w_hat, m).epsilon;
  const double cal_rel = std::abs(back - c.target_epsilon) / c.target_epsilon;
  const bool cc = cal_rel <= 1e-9;

  const PrivacyReport inf = Epsilon(kInfiniteHorizon, s, w_hat, m);
  Verdict v{a && b && cc, fmt::format("(a) {} (b) {} (c) {}", a ? "PASS" : "FAIL",
                                      b ? "PASS" : "FAIL", cc ? "PASS" : "FAIL")};
  v.notes.push_back(fmt::format("(a) eps(1e4) = {:.12g}, 256-bit sum = {:.12g}, rel {:.2e} (<= 1e-9)",
                                eps4, ref, rel));
  v.notes.push_back(fmt::format("(b) eps(1e6) = {:.6g}, growth over eps(1e4) = {:.2f}% (< 1%); "
                                "exponents p = {:.4g}, q = {:.4g}, eps(inf) = {:.6g}",
                                eps6, 100 * growth, inf.exponent_psi, inf.exponent_y,
                                inf.epsilon));
  v.notes.push_back(fmt::format("(c) target {} -> sigma_xi {:.6g}, sigma_zeta {:.6g}, "
                                "eps {:.15g}, rel {:.2e} (<= 1e-9)",
                                c.target_epsilon, cal.sigma_xi, cal.sigma_zeta, back, cal_rel));
  return v;
}

Verdict Criterion8() {
  const ExperimentConfig c = Config("truthfulness.ini");
  const TruthfulnessSummary s = RunTruthfulness(c, BuildInstance(c));
  Verdict v{s.bounded && s.ordered,
            fmt::format("median gain Algorithm 1 = {:.5g} < naive = {:.5g}: {}; max per-seed "
                        "agent gain = {:.5g} <= eta = {:.5g}: {}",
                        s.median_gain_alg1, s.median_gain_naive, s.ordered ? "yes" : "no",
                        s.max_agent_gain_alg1, s.eta.eta, s.bounded ? "yes" : "no")};
  for (const TruthfulnessSeed& r : s.runs) {
    v.notes.push_back(fmt::format("seed {}: gain Algorithm 1 {:.5g}, naive {:.5g}", r.seed,
                                  r.gain_alg1, r.gain_naive));
  }
  v.notes.push_back(fmt::format("epsilon(T={}) = {:.5g}{}", c.T, s.privacy.epsilon,
                                s.eta.linearization_exceeded ? " (>= 1)" : ""));
  return v;
}

Verdict Criterion9() {
  const Lemma2Summary s = CheckLemma2Bounds(200, 10000, 1);
  const bool i = s.violations_i == 0;
  const bool ii = s.violations_ii == 0;
  Verdict v{i && ii, fmt::format("(i) {} violations: {}; (ii) {} violations: {}", s.violations_i,
                                 i ? "PASS" : "FAIL", s.violations_ii, ii ? "PASS" : "FAIL")};
  v.notes.push_back(fmt::format("{} draws per part, {} rejected by the hypotheses filter",
                                s.draws, s.rejected));
  v.notes.push_back(fmt::format("(ii) with the rate-dependent constant: {} violations",
                                s.violations_ii_corrected));
  for (const Lemma2Violation& e : s.examples_ii) {
    v.notes.push_back(fmt::format("(ii) a0={:.4g} b0={:.4g} a={:.4g} b={:.4g} phi0={:.4g}: "
                                  "phi_{} = {:.6g} > {:.6g}",
                                  e.params.a0, e.params.b0, e.params.a, e.params.b,
                                  e.params.phi0, e.t, e.value, e.bound));
  }
  return v;
}

std::map<std::string, std::string> CsvFiles(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out[e.path().filename().string()] = ReadTextFile(e.path());
  }
  return out;
}

Verdict Criterion10() {
  struct Case {
    std::string config;
    Iteration T;
  };
  Verdict v{true, ""};
  int compared = 0;
  for (const Case& k : {Case{"convergence_sc.ini", 3000}, Case{"robustness.ini", 300},
                        Case{"truthfulness.ini", 400}}) {
    ExperimentConfig c = Config(k.config);
    c.T = k.T;
    c.stride = 10;
    c.seeds = {1, 2};
    std::vector<std::map<std::string, std::string>> files;
    for (const auto& [workers, jobs, tag] :
         {std::tuple{1, 1, "a"}, std::tuple{1, 1, "b"}, std::tuple{4, 2, "c"}}) {
      c.workers = workers;
      c.jobs = jobs;
      c.output_dir = Scratch(k.config + "." + tag).string();
      RunExperiment(c);
      files.push_back(CsvFiles(c.output_dir));
    }
    const bool same = !files[0].empty() && files[0] == files[1] && files[0] == files[2];
    v.pass = v.pass && same;
    compared += static_cast<int>(files[0].size());
    v.notes.push_back(fmt::format("{}: {} CSV files, repeat and 4 workers x 2 jobs {}", k.config,
                                  files[0].size(), same ? "byte-identical" : "DIFFER"));
  }
  v.detail = fmt::format("{} CSV files compared across 3 runs each", compared);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  ::unsetenv("TDAO_OUTPUT_DIR");

  const std::vector<std::function<Verdict()>> criteria = {
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9, Criterion10};
  int failed = 0;
  for (int n = 1; n <= 10; ++n) {
    if (only != 0 && n != only) continue;
    Verdict v;
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    fmt::print("{} criterion {}: {}\n", v.pass ? "PASS" : "FAIL", n, v.detail);
    for (const auto& note : v.notes) fmt::print("    {}\n", note);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
