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

#include "tdao/harness/config.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "tdao/error.hpp"

namespace tdao::harness {

namespace pt = boost::property_tree;

namespace {

ScheduleSet MakeSchedules(double u, double v, double w1, double w2,
                          double zeta_exp, double xi_exp, double gamma2_base = 1.0) {
  ScheduleSet s;
  s.lambda = {1.0, u};
  s.alpha = {1.0, v};
  s.gamma1 = {1.0, w1};
  s.gamma2 = {gamma2_base, w2};
  s.noise.zeta = {1.0, zeta_exp};
  s.noise.xi = {1.0, xi_exp};
  return s;
}

std::string Num(double v) { return fmt::format("{}", v); }

std::string HorizonText(Iteration t) {
  return t == kInfiniteHorizon ? "inf" : fmt::format("{}", t);
}

Iteration ParseHorizon(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInfiniteHorizon;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "bad iteration count '" + s + "'");
  }
}

std::vector<std::uint64_t> ParseSeeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    try {
      out.push_back(std::stoull(item.substr(b)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "seed list is empty");
  return out;
}

// Reads `key` into `out` when present, with the conversion errors mapped to
// kConfig.
template <typename T>
void Read(const pt::ptree& tree, const std::string& key, T& out) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, std::string>) {
    out = *node;
  } else {
    const auto parsed = tree.get_optional<T>(key);
    if (!parsed) throw Error(ErrorCode::kConfig, fmt::format("bad value for {}: '{}'", key, *node));
    out = *parsed;
  }
}

void ReadProfile(const pt::ptree& tree, const std::string& section,
                 const std::string& base_key, const std::string& exp_key,
                 DecayProfile& p) {
  Read(tree, section + "." + base_key, p.base);
  Read(tree, section + "." + exp_key, p.exponent);
}

void ReadSchedules(const pt::ptree& tree, const std::string& section, ScheduleSet& s) {
  ReadProfile(tree, section, "lambda0", "u", s.lambda);
  ReadProfile(tree, section, "alpha0", "v", s.alpha);
  ReadProfile(tree, section, "gamma1", "w1", s.gamma1);
  ReadProfile(tree, section, "gamma2", "w2", s.gamma2);
  ReadProfile(tree, section, "sigma_zeta", "sigma_zeta_exp", s.noise.zeta);
  ReadProfile(tree, section, "sigma_xi", "sigma_xi_exp", s.noise.xi);
}

void WriteSchedules(std::string& out, const std::string& section, const ScheduleSet& s) {
  out += fmt::format("[{}]\n", section);
  out += fmt::format("lambda0 = {}\nu = {}\n", Num(s.lambda.base), Num(s.lambda.exponent));
  out += fmt::format("alpha0 = {}\nv = {}\n", Num(s.alpha.base), Num(s.alpha.exponent));
  out += fmt::format("gamma1 = {}\nw1 = {}\n", Num(s.gamma1.base), Num(s.gamma1.exponent));
  out += fmt::format("gamma2 = {}\nw2 = {}\n", Num(s.gamma2.base), Num(s.gamma2.exponent));
  out += fmt::format("sigma_zeta = {}\nsigma_zeta_exp = {}\n", Num(s.noise.zeta.base),
                     Num(s.noise.zeta.exponent));
  out += fmt::format("sigma_xi = {}\nsigma_xi_exp = {}\n", Num(s.noise.xi.base),
                     Num(s.noise.xi.exponent));
}

}  // namespace

std::vector<std::string> PresetNames() {
  return {"corollary1-sc", "corollary1-cvx", "corollary1-ncvx", "ev-convergence",
          "sec5-truthful"};
}

ScheduleSet PresetSchedules(const std::string& name) {
  if (name == "corollary1-sc") return MakeSchedules(0.95, 0.95, 0.1, 0.24, 0.84, 0.95);
  if (name == "corollary1-cvx" || name == "ev-convergence") {
    return MakeSchedules(0.51, 0.53, 0.01, 0.01, 0.57, 0.79);
  }
  if (name == "corollary1-ncvx") return MakeSchedules(0.51, 0.27, 0.01, 0.01, 0.57, 0.5);
  // gamma2 base 2 keeps the c1 denominator w_hat gamma2 - (u - w1 - w2)
  // positive for w_hat = 0.8.
  if (name == "sec5-truthful") return MakeSchedules(3.1, 2.0, 1.2, 0.4, 0.19, 0.2, 2.0);
  throw Error(ErrorCode::kConfig, "unknown preset '" + name + "'");
}

void ApplyPreset(ExperimentConfig& c, const std::string& name) {
  c.schedules = PresetSchedules(name);
  c.preset = name;
  if (name == "corollary1-sc") c.regime = "T1-strongly-convex";
  if (name == "corollary1-cvx" || name == "ev-convergence") c.regime = "T1-convex";
  if (name == "corollary1-ncvx") c.regime = "T1-nonconvex";
  if (name == "sec5-truthful") c.regime = "T2-truthful";
}

SpectralPolicy ParseSpectralPolicy(const std::string& s) {
  if (s == "enforce") return SpectralPolicy::kEnforce;
  if (s == "report") return SpectralPolicy::kReport;
  throw Error(ErrorCode::kConfig, "spectral_policy must be enforce or report");
}

ChargingRule ParseChargingRule(const std::string& s) {
  if (s == "follow") return ChargingRule::kFollow;
  if (s == "best-response") return ChargingRule::kBestResponse;
  throw Error(ErrorCode::kConfig, "charging_rule must be follow or best-response");
}

std::string ChargingRuleName(ChargingRule r) {
  return r == ChargingRule::kFollow ? "follow" : "best-response";
}

ExperimentConfig ParseConfig(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }

  ExperimentConfig c;
  Read(tree, "experiment.kind", c.kind);
  // A preset sets the schedule first; explicit keys below override it.
  if (auto preset = tree.get_optional<std::string>("experiment.preset");
      preset && !preset->empty()) {
    ApplyPreset(c, *preset);
  }
  Read(tree, "experiment.regime", c.regime);
  ParseRegime(c.regime);

  Read(tree, "problem.type", c.problem);
  Read(tree, "problem.synthetic_kind", c.synthetic_kind);
  Read(tree, "problem.agents", c.agents);
  Read(tree, "problem.decision_dim", c.decision_dim);
  Read(tree, "problem.aggregate_dim", c.aggregate_dim);
  Read(tree, "problem.seed", c.problem_seed);
  Read(tree, "problem.ev_per_model", c.ev_per_model);
  Read(tree, "problem.ev_models_csv", c.ev_models_csv);
  Read(tree, "problem.demand_csv", c.demand_csv);

  Read(tree, "network.topology", c.topology);
  Read(tree, "network.degree", c.degree);
  Read(tree, "network.seed", c.graph_seed);
  Read(tree, "network.edge_weight", c.edge_weight);
  Read(tree, "network.edgelist", c.edgelist);
  Read(tree, "network.spectral_policy", c.spectral_policy);
  ParseSpectralPolicy(c.spectral_policy);

  ReadSchedules(tree, "schedules", c.schedules);
  Read(tree, "schedules.noise", c.noise);

  if (auto t = tree.get_optional<std::string>("run.T")) c.T = ParseHorizon(*t);
  Read(tree, "run.stride", c.stride);
  if (auto s = tree.get_optional<std::string>("run.seeds")) c.seeds = ParseSeeds(*s);
  Read(tree, "run.workers", c.workers);
  Read(tree, "run.jobs", c.jobs);
  Read(tree, "run.init", c.init);
  Read(tree, "run.oracle_tol", c.oracle_tol);
  Read(tree, "run.oracle_max_iters", c.oracle_max_iters);
  Read(tree, "run.metric", c.metric);

  Read(tree, "robustness.baseline_lambda", c.baseline_lambda);
  Read(tree, "robustness.early_t", c.early_t);
  Read(tree, "robustness.late_t", c.late_t);
  Read(tree, "robustness.ratio_threshold", c.ratio_threshold);

  Read(tree, "truthfulness.group", c.group);
  Read(tree, "truthfulness.shift_fraction", c.shift_fraction);
  Read(tree, "truthfulness.pivot_slot", c.pivot_slot);
  if (auto r = tree.get_optional<std::string>("truthfulness.charging_rule")) {
    c.charging_rule = ParseChargingRule(*r);
  }
  ReadSchedules(tree, "truthful_schedules", c.truthful_schedules);

  if (auto t = tree.get_optional<std::string>("privacy.T")) c.privacy_T = ParseHorizon(*t);
  Read(tree, "privacy.target_epsilon", c.target_epsilon);
  Read(tree, "privacy.gradcheck_h", c.gradcheck_h);
  Read(tree, "privacy.gradcheck_points", c.gradcheck_points);

  Read(tree, "output.dir", c.output_dir);

  if (c.T < 0) throw Error(ErrorCode::kConfig, "run.T must be finite");
  if (c.stride < 1) throw Error(ErrorCode::kConfig, "run.stride must be >= 1");
  if (c.workers < 1 || c.jobs < 1) throw Error(ErrorCode::kConfig, "workers and jobs must be >= 1");
  if (c.init != "project-zero" && c.init != "random-feasible") {
    throw Error(ErrorCode::kConfig, "run.init must be project-zero or random-feasible");
  }
  try {
    c.schedules.Validate();
    c.truthful_schedules.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

std::string ToIni(const ExperimentConfig& c) {
  std::string out;
  out += "[experiment]\n";
  out += fmt::format("kind = {}\npreset = {}\nregime = {}\n\n", c.kind, c.preset, c.regime);
  out += "[problem]\n";
  out += fmt::format("type = {}\nsynthetic_kind = {}\nagents = {}\n", c.problem,
                     c.synthetic_kind, c.agents);
  out += fmt::format("decision_dim = {}\naggregate_dim = {}\nseed = {}\n", c.decision_dim,
                     c.aggregate_dim, c.problem_seed);
  out += fmt::format("ev_per_model = {}\nev_models_csv = {}\ndemand_csv = {}\n\n",
                     c.ev_per_model, c.ev_models_csv, c.demand_csv);
  out += "[network]\n";
  out += fmt::format("topology = {}\ndegree = {}\nseed = {}\nedge_weight = {}\n", c.topology,
                     c.degree, c.graph_seed, Num(c.edge_weight));
  out += fmt::format("edgelist = {}\nspectral_policy = {}\n\n", c.edgelist, c.spectral_policy);
  WriteSchedules(out, "schedules", c.schedules);
  out += fmt::format("noise = {}\n\n", c.noise ? "true" : "false");
  out += "[run]\n";
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  }
  out += fmt::format("T = {}\nstride = {}\nseeds = {}\nworkers = {}\njobs = {}\n", c.T,
                     c.stride, seeds, c.workers, c.jobs);
  out += fmt::format("init = {}\noracle_tol = {}\noracle_max_iters = {}\nmetric = {}\n\n",
                     c.init, Num(c.oracle_tol), c.oracle_max_iters, c.metric);
  out += "[robustness]\n";
  out += fmt::format("baseline_lambda = {}\nearly_t = {}\nlate_t = {}\nratio_threshold = {}\n\n",
                     Num(c.baseline_lambda), c.early_t, c.late_t, Num(c.ratio_threshold));
  out += "[truthfulness]\n";
  out += fmt::format("group = {}\nshift_fraction = {}\npivot_slot = {}\ncharging_rule = {}\n\n",
                     c.group, Num(c.shift_fraction), c.pivot_slot,
                     ChargingRuleName(c.charging_rule));
  WriteSchedules(out, "truthful_schedules", c.truthful_schedules);
  out += "\n[privacy]\n";
  out += fmt::format("T = {}\ntarget_epsilon = {}\ngradcheck_h = {}\ngradcheck_points = {}\n\n",
                     HorizonText(c.privacy_T), Num(c.target_epsilon), Num(c.gradcheck_h),
                     c.gradcheck_points);
  out += "[output]\n";
  out += fmt::format("dir = {}\n", c.output_dir);
  return out;
}

}  // namespace tdao::harness
