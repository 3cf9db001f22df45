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

#include "tdao/harness/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <openssl/sha.h>

#include "json.hpp"
#include "tdao/error.hpp"

namespace tdao::harness {

void WriteTextFile(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    throw Error(ErrorCode::kIo, fmt::format("{}: {}", path.parent_path().string(), ec.message()));
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string Sha1Hex(const std::string& bytes) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  std::string hex;
  for (unsigned char b : digest) hex += fmt::format("{:02x}", b);
  return hex;
}

std::string GitBlobHash(const std::string& bytes) {
  std::string framed = fmt::format("blob {}", bytes.size());
  framed.push_back('\0');
  return Sha1Hex(framed + bytes);
}

std::filesystem::path ResolveOutputDir(const ExperimentConfig& c) {
  if (const char* env = std::getenv("TDAO_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#000000"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double Map(double v) const {
    const double a = log ? std::log10(v) : v;
    return (a - lo) / (hi - lo);
  }
  bool Admits(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis FitAxis(const std::vector<const std::vector<double>*>& values, bool log) {
  Axis axis;
  axis.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* vs : values) {
    for (double v : *vs) {
      if (!axis.Admits(v)) continue;
      const double a = log ? std::log10(v) : v;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

std::vector<double> Ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    const int step = std::max(1, static_cast<int>((a.hi - a.lo) / 8.0));
    for (double e = a.lo; e <= a.hi + 1e-9; e += step) out.push_back(std::pow(10.0, e));
  } else {
    for (int k = 0; k <= 5; ++k) out.push_back(a.lo + (a.hi - a.lo) * k / 5.0);
  }
  return out;
}

std::string TickLabel(double v, bool log) {
  if (log) return fmt::format("1e{}", static_cast<int>(std::lround(std::log10(v))));
  return fmt::format("{:.3g}", v);
}

}  // namespace

std::string RenderSvg(const PlotSpec& spec) {
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : spec.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = FitAxis(xs, spec.log_x);
  const Axis ay = FitAxis(ys, spec.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.Map(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.Map(v)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     kLeft + pw / 2, Escape(spec.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
      kLeft, kTop, pw, ph);
  for (double t : Ticks(ax)) {
    const double x = px(t);
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n",
                       x, kTop, kTop + ph);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x,
                       kTop + ph + 16, TickLabel(t, ax.log));
  }
  for (double t : Ticks(ay)) {
    const double y = py(t);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n",
                       kLeft, y, kLeft + pw);
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6,
                       y + 4, TickLabel(t, ay.log));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 14, Escape(spec.x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kTop + ph / 2, Escape(spec.y_label));

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const PlotSeries& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string points;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!ax.Admits(s.x[i]) || !ay.Admits(s.y[i])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color,
        points);
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       kLeft + pw + 12, ly, kLeft + pw + 32, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + pw + 36, ly + 4,
                       Escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

void WriteManifest(const std::filesystem::path& dir, const ExperimentConfig& c,
                   const std::vector<std::filesystem::path>& inputs,
                   const std::vector<std::filesystem::path>& outputs,
                   const std::string& summary_json) {
  using nlohmann::ordered_json;
  const std::string ini = ToIni(c);
  ordered_json m;
  m["config_hash"] = GitBlobHash(ini);
  m["config"] = ini;
  ordered_json in = ordered_json::object();
  for (const auto& p : inputs) in[p.string()] = GitBlobHash(ReadTextFile(p));
  m["inputs"] = in;
  ordered_json out = ordered_json::object();
  for (const auto& p : outputs) out[p.filename().string()] = GitBlobHash(ReadTextFile(dir / p.filename()));
  m["outputs"] = out;
  m["summary"] = summary_json.empty() ? ordered_json::object() : ordered_json::parse(summary_json);
  WriteTextFile(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace tdao::harness
