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

// File emission for experiments: CSV/text files, minimal SVG line plots and
// the run manifest.

#ifndef TDAO_HARNESS_OUTPUT_HPP_
#define TDAO_HARNESS_OUTPUT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "tdao/harness/config.hpp"

namespace tdao::harness {

// Creates parent directories; throws kIo with the path on failure.
void WriteTextFile(const std::filesystem::path& path, const std::string& content);
std::string ReadTextFile(const std::filesystem::path& path);

std::string Sha1Hex(const std::string& bytes);
// SHA-1 of "blob <size>\0<bytes>", the content hash git assigns to a file.
std::string GitBlobHash(const std::string& bytes);

// config.output_dir unless TDAO_OUTPUT_DIR is set.
std::filesystem::path ResolveOutputDir(const ExperimentConfig& c);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

// Axes, ticks at powers of ten (log) or five even steps (linear), one
// polyline per series and a legend. Non-positive values are dropped on log
// axes and non-finite values everywhere.
std::string RenderSvg(const PlotSpec& spec);

// manifest.json: the canonical config text and its hash, the git blob hash of
// every input file, the list of produced files with their hashes, and a
// free-form summary object (JSON text).
void WriteManifest(const std::filesystem::path& dir, const ExperimentConfig& c,
                   const std::vector<std::filesystem::path>& inputs,
                   const std::vector<std::filesystem::path>& outputs,
                   const std::string& summary_json);

}  // namespace tdao::harness

#endif  // TDAO_HARNESS_OUTPUT_HPP_
