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

#include "tdao/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "tdao/error.hpp"

namespace tdao {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kBandTolerance = 1e-9;
constexpr int kMaxPairingAttempts = 1000;

}  // namespace

Topology::Topology(int num_agents, const std::vector<Edge>& edges,
                   std::string generator)
    : adjacency_(num_agents), generator_(std::move(generator)) {
  if (num_agents < 1) {
    throw Error(ErrorCode::kInvalidArgument, "topology needs >= 1 agent");
  }
  std::set<Edge> seen;
  for (Edge e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= num_agents || e.v >= num_agents) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("edge ({}, {}) out of range", e.u, e.v));
    }
    if (e.u == e.v) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("self-loop at {}", e.u));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
    if (!seen.insert(e).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("duplicate edge ({}, {})", e.u, e.v));
    }
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

Topology Topology::Ring(int num_agents) {
  std::vector<Edge> edges;
  if (num_agents == 2) edges.push_back({0, 1});
  if (num_agents > 2) {
    for (int i = 0; i < num_agents; ++i) {
      edges.push_back({i, (i + 1) % num_agents});
    }
  }
  return Topology(num_agents, edges, "ring");
}

Topology Topology::Complete(int num_agents) {
  std::vector<Edge> edges;
  for (int i = 0; i < num_agents; ++i) {
    for (int j = i + 1; j < num_agents; ++j) edges.push_back({i, j});
  }
  return Topology(num_agents, edges, "complete");
}

int Topology::max_degree() const {
  int d = 0;
  for (const auto& nbrs : adjacency_) d = std::max<int>(d, nbrs.size());
  return d;
}

std::vector<Edge> Topology::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (int j : adjacency_[i]) {
      if (i < j) out.push_back({i, j});
    }
  }
  return out;
}

bool Topology::IsConnected() const {
  if (adjacency_.empty()) return false;
  std::vector<bool> seen(adjacency_.size(), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int visited = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : adjacency_[i]) {
      if (!seen[j]) {
        seen[j] = true;
        ++visited;
        frontier.push(j);
      }
    }
  }
  return visited == size();
}

bool Topology::IsSymmetric() const {
  for (int i = 0; i < size(); ++i) {
    for (int j : adjacency_[i]) {
      if (!std::binary_search(adjacency_[j].begin(), adjacency_[j].end(), i)) {
        return false;
      }
    }
  }
  return true;
}

Topology GenerateKRegular(int num_agents, int degree, std::uint64_t seed) {
  if (degree < 1 || degree >= num_agents ||
      (static_cast<long long>(num_agents) * degree) % 2 != 0) {
    throw Error(ErrorCode::kInfeasibleDegree,
                fmt::format("no simple {}-regular graph on {} vertices", degree,
                            num_agents));
  }
  std::mt19937_64 rng(seed);
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(num_agents) * degree);
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < degree; ++k) stubs.push_back(i);
  }
  for (int attempt = 0; attempt < kMaxPairingAttempts; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::set<Edge> edges;
    bool simple = true;
    for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
      Edge e{std::min(stubs[s], stubs[s + 1]), std::max(stubs[s], stubs[s + 1])};
      if (e.u == e.v || !edges.insert(e).second) {
        simple = false;
        break;
      }
    }
    if (!simple) continue;
    Topology topo(num_agents, {edges.begin(), edges.end()},
                  fmt::format("k-regular(k={}, seed={})", degree, seed));
    if (topo.IsConnected()) return topo;
  }
  throw Error(ErrorCode::kDisconnectedTopology,
              fmt::format("pairing model found no simple connected {}-regular "
                          "graph in {} attempts",
                          degree, kMaxPairingAttempts));
}

SpectralCertificate ValidateAssumption2(const Mat& w) {
  SpectralCertificate cert;
  if (w.rows() != w.cols() || w.rows() == 0) {
    cert.violations.push_back("W must be square and non-empty");
    return cert;
  }
  const int m = static_cast<int>(w.rows());

  const double row_err = (w * Vec::Ones(m)).cwiseAbs().maxCoeff();
  const double col_err = (Vec::Ones(m).transpose() * w).cwiseAbs().maxCoeff();
  if (!(row_err <= kSumTolerance)) {
    cert.violations.push_back(
        fmt::format("W 1 = 0 violated (max |row sum| = {:.3g})", row_err));
  }
  if (!(col_err <= kSumTolerance)) {
    cert.violations.push_back(
        fmt::format("1^T W = 0^T violated (max |column sum| = {:.3g})", col_err));
  }

  bool symmetric_values = true;
  for (int i = 0; i < m; ++i) {
    cert.w_hat = i == 0 ? std::abs(w(0, 0))
                        : std::min(cert.w_hat, std::abs(w(i, i)));
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      if ((w(i, j) != 0.0) != (w(j, i) != 0.0)) {
        cert.violations.push_back(
            fmt::format("support not symmetric at ({}, {})", i, j));
      }
      if (w(i, j) < 0.0) {
        cert.violations.push_back(
            fmt::format("negative off-diagonal weight at ({}, {})", i, j));
      }
      if (std::abs(w(i, j) - w(j, i)) > kSumTolerance) symmetric_values = false;
    }
  }

  if (symmetric_values) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(w, Eigen::EigenvaluesOnly);
    const Vec& ev = solver.eigenvalues();
    cert.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  } else {
    Eigen::EigenSolver<Mat> solver(w, false);
    for (int i = 0; i < m; ++i) {
      cert.eigenvalues.push_back(solver.eigenvalues()(i).real());
    }
  }
  std::sort(cert.eigenvalues.begin(), cert.eigenvalues.end(),
            std::greater<double>());
  cert.delta2 = m >= 2 ? cert.eigenvalues[1] : 0.0;

  const double top = cert.eigenvalues.front();
  const double bottom = cert.eigenvalues.back();
  if (std::abs(top) > kBandTolerance) {
    cert.violations.push_back(
        fmt::format("largest eigenvalue {:.6g} is not 0", top));
  }
  if (m >= 2 && !(cert.delta2 < -kBandTolerance)) {
    cert.violations.push_back(fmt::format(
        "zero eigenvalue not simple (delta_2 = {:.6g})", cert.delta2));
  }
  if (!(bottom > -1.0 + kBandTolerance)) {
    cert.violations.push_back(
        fmt::format("smallest eigenvalue {:.6g} <= -1", bottom));
  }
  return cert;
}

WeightMatrix WeightMatrix::FromDense(const Mat& w, SpectralPolicy policy) {
  WeightMatrix out;
  out.dense_ = w;
  out.certificate_ = ValidateAssumption2(w);
  if (policy == SpectralPolicy::kEnforce && !out.certificate_.ok()) {
    std::string joined;
    for (const auto& v : out.certificate_.violations) {
      joined += (joined.empty() ? "" : "; ") + v;
    }
    throw Error(ErrorCode::kSpectralViolation, joined);
  }
  const int m = static_cast<int>(w.rows());
  out.rows_.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i != j && w(i, j) != 0.0) out.rows_[i].emplace_back(j, w(i, j));
    }
  }
  return out;
}

WeightMatrix BuildWeightMatrix(const Topology& topology, double edge_weight,
                               SpectralPolicy policy) {
  if (!(edge_weight > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "edge weight must be positive");
  }
  if (!topology.IsConnected()) {
    throw Error(ErrorCode::kDisconnectedTopology,
                "mixing matrix needs a connected topology");
  }
  if (!(edge_weight * topology.max_degree() < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("edge_weight * max_degree = {:.6g} must be < 1",
                            edge_weight * topology.max_degree()));
  }
  const int m = topology.size();
  Mat w = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j : topology.neighbors(i)) w(i, j) = edge_weight;
    w(i, i) = -edge_weight * topology.degree(i);
  }
  return WeightMatrix::FromDense(w, policy);
}

Topology ReadEdgeList(const std::filesystem::path& path, int num_agents) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open edge list " + path.string());
  }
  std::vector<Edge> edges;
  int max_index = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Edge e;
    if (!(fields >> e.u >> e.v)) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: expected \"i j\"",
                                              path.string(), line_no));
    }
    max_index = std::max({max_index, e.u, e.v});
    edges.push_back(e);
  }
  const int m = num_agents > 0 ? num_agents : max_index + 1;
  return Topology(m, edges, "edgelist:" + path.filename().string());
}

void WriteEdgeList(const Topology& topology, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const Edge& e : topology.edges()) out << e.u << ' ' << e.v << '\n';
}

void WriteWeightCsv(const WeightMatrix& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (int i = 0; i < w.size(); ++i) {
    for (int j = 0; j < w.size(); ++j) {
      out << (j ? "," : "") << fmt::format("{:.17g}", w(i, j));
    }
    out << '\n';
  }
}

}  // namespace tdao
