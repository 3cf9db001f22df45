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

// Experiment configuration: a flat INI file with one section per module.
// Every field has a default; `--print-config` dumps the effective values.

#ifndef TDAO_HARNESS_CONFIG_HPP_
#define TDAO_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdao/network.hpp"
#include "tdao/privacy.hpp"
#include "tdao/schedules.hpp"

namespace tdao::harness {

enum class ChargingRule {
  kFollow,        // untruthful agents use the schedule computed for them
  kBestResponse,  // they re-optimize their own true cost against the others
};

// Schedule presets: corollary1-sc, corollary1-cvx, corollary1-ncvx,
// ev-convergence (same values as corollary1-cvx) and sec5-truthful.
std::vector<std::string> PresetNames();
ScheduleSet PresetSchedules(const std::string& name);

struct ExperimentConfig {
  // [experiment]
  std::string kind = "convergence";  // convergence | robustness | truthfulness
                                     // | privacy-report | gradcheck | validate-graph
  std::string preset;                // empty, or a preset name
  std::string regime = "T1-strongly-convex";

  // [problem]
  std::string problem = "synthetic";  // synthetic | ev
  std::string synthetic_kind = "strongly-convex";
  int agents = 10;
  int decision_dim = 2;
  int aggregate_dim = 2;
  std::uint64_t problem_seed = 3;
  int ev_per_model = 2;
  std::string ev_models_csv;  // empty: bundled table
  std::string demand_csv;     // empty: bundled profile

  // [network]
  std::string topology = "k-regular";  // k-regular | ring | complete | edgelist
  int degree = 4;
  std::uint64_t graph_seed = 1;
  double edge_weight = 0.2;
  std::string edgelist;
  std::string spectral_policy = "report";  // enforce | report

  // [schedules]
  ScheduleSet schedules = PresetSchedules("corollary1-sc");
  bool noise = true;

  // [run]
  Iteration T = 10000;
  Iteration stride = 100;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int workers = 1;
  int jobs = 1;  // seeds run concurrently
  std::string init = "project-zero";  // project-zero | random-feasible
  double oracle_tol = 1e-10;
  int oracle_max_iters = 200000;
  std::string metric = "err_x";  // slope / verdict metric column

  // [robustness]
  double baseline_lambda = 0.01;
  Iteration early_t = 10;
  Iteration late_t = 1000;
  double ratio_threshold = 10.0;

  // [truthfulness]
  int group = 3;  // 1-based model group; both EVs of the group misreport
  double shift_fraction = 0.4;
  int pivot_slot = 3;  // slots [0, pivot) precede midnight
  ChargingRule charging_rule = ChargingRule::kBestResponse;
  ScheduleSet truthful_schedules = PresetSchedules("sec5-truthful");

  // [privacy]
  Iteration privacy_T = 10000;  // kInfiniteHorizon for the limit
  double target_epsilon = 0.5;
  double gradcheck_h = 1e-5;
  int gradcheck_points = 20;

  // [output]
  std::string output_dir = "out";
};

// Overwrites the schedule exponents, bases and regime with a named preset;
// throws kConfig for unknown names.
void ApplyPreset(ExperimentConfig& c, const std::string& name);

ExperimentConfig LoadConfig(const std::filesystem::path& path);
ExperimentConfig ParseConfig(const std::string& ini_text);
// Canonical INI text: every field, fixed order, shortest round-trip numbers.
std::string ToIni(const ExperimentConfig& c);

SpectralPolicy ParseSpectralPolicy(const std::string& s);
ChargingRule ParseChargingRule(const std::string& s);
std::string ChargingRuleName(ChargingRule r);

}  // namespace tdao::harness

#endif  // TDAO_HARNESS_CONFIG_HPP_
