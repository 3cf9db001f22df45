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

// tdao: command-line front end for the experiment harness.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdao/error.hpp"
#include "tdao/harness/config.hpp"
#include "tdao/harness/experiments.hpp"
#include "tdao/privacy.hpp"

namespace {

using tdao::harness::ExperimentConfig;

struct Overrides {
  std::string output_dir;
  std::optional<std::int64_t> T;
  std::vector<std::uint64_t> seeds;
  std::optional<int> jobs;
  std::optional<int> workers;

  void Attach(CLI::App* app) {
    app->add_option("-o,--output-dir", output_dir, "Output directory (TDAO_OUTPUT_DIR wins)");
    app->add_option("-T,--iterations", T, "Iteration horizon");
    app->add_option("--seeds", seeds, "Seed list");
    app->add_option("-j,--jobs", jobs, "Seeds run concurrently");
    app->add_option("-w,--workers", workers, "Agent-update threads per run");
  }

  void Apply(ExperimentConfig& c) const {
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (T) c.T = *T;
    if (!seeds.empty()) c.seeds = seeds;
    if (jobs) c.jobs = *jobs;
    if (workers) c.workers = *workers;
  }
};

int Report(const tdao::harness::ExperimentOutcome& o) {
  std::cout << o.message << "\n";
  for (const auto& f : o.files) std::cout << "  wrote " << f.string() << "\n";
  return o.exit_code;
}

ExperimentConfig Load(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : tdao::harness::LoadConfig(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful distributed aggregative optimization simulator"};
  app.require_subcommand(0, 1);

  bool print_config = false;
  std::string print_path;
  app.add_flag("--print-config", print_config,
               "Print the effective configuration (defaults, or --config) and exit");
  app.add_option("--config", print_path, "Config used with --print-config");

  std::string run_path;
  Overrides run_over;
  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path, "INI config")->required()->check(CLI::ExistingFile);
  run_over.Attach(run);

  std::string graph_path;
  double edge_weight = 0.2;
  std::string graph_out = "out/graph";
  CLI::App* graph = app.add_subcommand("validate-graph", "Check a topology and its weight matrix");
  graph->add_option("edgelist", graph_path, "Edge list, one 'i j' pair per line")
      ->required()
      ->check(CLI::ExistingFile);
  graph->add_option("--edge-weight", edge_weight, "Uniform edge weight");
  graph->add_option("-o,--output-dir", graph_out, "Output directory");

  std::string privacy_path;
  std::string privacy_T;
  Overrides privacy_over;
  CLI::App* privacy = app.add_subcommand("privacy-report", "Privacy budget and eta for a config");
  privacy->add_option("config", privacy_path, "INI config")->required()->check(CLI::ExistingFile);
  privacy->add_option("--horizon", privacy_T, "Privacy horizon, an integer or 'inf'");
  privacy_over.Attach(privacy);

  std::string grad_path;
  Overrides grad_over;
  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference check of the gradients");
  grad->add_option("config", grad_path, "INI config")->required()->check(CLI::ExistingFile);
  grad_over.Attach(grad);

  int draws = 200;
  std::int64_t horizon = 10000;
  std::uint64_t lemma_seed = 1;
  CLI::App* lemma = app.add_subcommand("lemma2", "Numeric check of the two sequence bounds");
  lemma->add_option("draws", draws, "Random draws per part")->required()->check(CLI::PositiveNumber);
  lemma->add_option("T", horizon, "Horizon")->required()->check(CLI::PositiveNumber);
  lemma->add_option("--seed", lemma_seed, "Draw seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config) {
      std::cout << tdao::harness::ToIni(Load(print_path));
      return 0;
    }
    if (*run) {
      ExperimentConfig c = Load(run_path);
      run_over.Apply(c);
      return Report(tdao::harness::RunExperiment(c));
    }
    if (*graph) {
      ExperimentConfig c;
      c.kind = "validate-graph";
      c.topology = "edgelist";
      c.edgelist = graph_path;
      c.edge_weight = edge_weight;
      c.output_dir = graph_out;
      return Report(tdao::harness::RunExperiment(c));
    }
    if (*privacy) {
      ExperimentConfig c = Load(privacy_path);
      privacy_over.Apply(c);
      c.kind = "privacy-report";
      if (privacy_T == "inf") {
        c.privacy_T = tdao::kInfiniteHorizon;
      } else if (!privacy_T.empty()) {
        c.privacy_T = std::stoll(privacy_T);
      }
      return Report(tdao::harness::RunExperiment(c));
    }
    if (*grad) {
      ExperimentConfig c = Load(grad_path);
      grad_over.Apply(c);
      c.kind = "gradcheck";
      return Report(tdao::harness::RunExperiment(c));
    }
    if (*lemma) {
      const tdao::Lemma2Summary s = tdao::CheckLemma2Bounds(draws, horizon, lemma_seed);
      std::cout << "lemma2: " << s.draws << " draws per part, " << s.rejected
                << " rejected by the hypothesis filter\n"
                << "  polynomial-decay bound violations: " << s.violations_i << "\n"
                << "  summable bound violations (as stated): " << s.violations_ii << "\n"
                << "  summable bound violations (corrected constants): "
                << s.violations_ii_corrected << "\n";
      for (const auto& v : s.examples_ii) {
        std::cout << "  e.g. a0=" << v.params.a0 << " b0=" << v.params.b0 << " a=" << v.params.a
                  << " b=" << v.params.b << " Phi0=" << v.params.phi0 << ": Phi_" << v.t << " = "
                  << v.value << " > " << v.bound << "\n";
      }
      return s.ok() ? tdao::harness::kExitOk : tdao::harness::kExitAssertion;
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tdao::harness::kExitError;
  }
}
