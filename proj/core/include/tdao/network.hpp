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

// Communication topologies and the mixing matrix W of the gradient-tracking
// iteration: w_ij > 0 on edges, w_ii = -sum_j w_ij, so W 1 = 0 and 1^T W = 0
// for symmetric topologies.

#ifndef TDAO_NETWORK_HPP_
#define TDAO_NETWORK_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tdao/types.hpp"

namespace tdao {

struct Edge {
  int u = 0;
  int v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class Topology {
 public:
  Topology() = default;
  // Undirected simple graph; self-loops and duplicate edges are rejected.
  Topology(int num_agents, const std::vector<Edge>& edges,
           std::string generator = "explicit");

  static Topology Ring(int num_agents);
  static Topology Complete(int num_agents);

  int size() const { return static_cast<int>(adjacency_.size()); }
  const std::vector<int>& neighbors(int i) const { return adjacency_[i]; }
  int degree(int i) const { return static_cast<int>(adjacency_[i].size()); }
  int max_degree() const;
  const std::string& generator() const { return generator_; }

  // Sorted (u < v) edge list.
  std::vector<Edge> edges() const;
  bool IsConnected() const;
  bool IsSymmetric() const;

 private:
  std::vector<std::vector<int>> adjacency_;
  std::string generator_ = "explicit";
};

// Random k-regular simple connected graph from the pairing (configuration)
// model, rejecting multi-edges, self-loops and disconnected draws; at most
// 1000 attempts. Deterministic per seed. Throws kInfeasibleDegree when m*k
// is odd or k >= m, and kDisconnectedTopology after exhausting retries.
Topology GenerateKRegular(int num_agents, int degree, std::uint64_t seed);

struct SpectralCertificate {
  std::vector<double> eigenvalues;  // sorted decreasing: delta_1 >= ... >= delta_m
  double delta2 = 0.0;              // second largest eigenvalue
  double w_hat = 0.0;               // min_i |w_ii|
  std::vector<std::string> violations;  // empty iff every check passed

  bool ok() const { return violations.empty(); }
};

// Row/column sums within 1e-12, symmetric support, eigenvalues in (-1, 0]
// with a simple zero eigenvalue (band checks use tolerance 1e-9, boundary
// cases count as violations). Never throws for square input.
SpectralCertificate ValidateAssumption2(const Mat& w);

enum class SpectralPolicy {
  kEnforce,  // throw kSpectralViolation on any eigenvalue violation
  kReport,   // keep the matrix, record violations in the certificate
};

class WeightMatrix {
 public:
  int size() const { return static_cast<int>(dense_.rows()); }
  const Mat& dense() const { return dense_; }
  double operator()(int i, int j) const { return dense_(i, j); }
  double diagonal(int i) const { return dense_(i, i); }
  double w_hat() const { return certificate_.w_hat; }
  const SpectralCertificate& certificate() const { return certificate_; }

  // Off-diagonal support of row i with weights, in increasing column order.
  const std::vector<std::pair<int, double>>& row(int i) const {
    return rows_[i];
  }

  static WeightMatrix FromDense(const Mat& w, SpectralPolicy policy);

 private:
  Mat dense_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  SpectralCertificate certificate_;
};

// Uniform edge weights. Requires a connected topology
// (kDisconnectedTopology) and edge_weight * max_degree < 1
// (kInvalidArgument).
WeightMatrix BuildWeightMatrix(const Topology& topology, double edge_weight,
                               SpectralPolicy policy = SpectralPolicy::kEnforce);

// Edge-list text: one "i j" pair per line, 0-indexed; blank lines and lines
// starting with '#' are skipped. The agent count is 1 + the largest index
// unless `num_agents` is given.
Topology ReadEdgeList(const std::filesystem::path& path, int num_agents = -1);
void WriteEdgeList(const Topology& topology, const std::filesystem::path& path);
void WriteWeightCsv(const WeightMatrix& w, const std::filesystem::path& path);

}  // namespace tdao

#endif  // TDAO_NETWORK_HPP_
