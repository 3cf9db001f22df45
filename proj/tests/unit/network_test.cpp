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
#include <filesystem>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "tdao/error.hpp"

namespace tdao {
namespace {

bool HasViolation(const SpectralCertificate& c, const std::string& needle) {
  return std::any_of(c.violations.begin(), c.violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

TEST(Topology, RejectsMalformedEdges) {
  EXPECT_THROW(Topology(3, {{0, 0}}), Error);
  EXPECT_THROW(Topology(3, {{0, 1}, {1, 0}}), Error);
  EXPECT_THROW(Topology(3, {{0, 3}}), Error);
}

TEST(Topology, RingAndComplete) {
  const Topology ring = Topology::Ring(6);
  EXPECT_EQ(ring.edges().size(), 6u);
  EXPECT_EQ(ring.max_degree(), 2);
  EXPECT_TRUE(ring.IsConnected());
  EXPECT_TRUE(ring.IsSymmetric());
  const Topology k5 = Topology::Complete(5);
  EXPECT_EQ(k5.edges().size(), 10u);
  EXPECT_EQ(k5.max_degree(), 4);
  EXPECT_FALSE(Topology(4, {{0, 1}, {2, 3}}).IsConnected());
}

TEST(GenerateKRegular, RegularConnectedSimpleAndSeeded) {
  for (std::uint64_t seed : {1u, 2u, 3u, 17u}) {
    const Topology t = GenerateKRegular(20, 4, seed);
    EXPECT_TRUE(t.IsConnected());
    for (int i = 0; i < 20; ++i) {
      EXPECT_EQ(t.degree(i), 4);
      const auto& nb = t.neighbors(i);
      EXPECT_EQ(std::set<int>(nb.begin(), nb.end()).size(), nb.size());
      EXPECT_EQ(std::count(nb.begin(), nb.end(), i), 0);
    }
    EXPECT_EQ(t.edges(), GenerateKRegular(20, 4, seed).edges());
  }
  EXPECT_NE(GenerateKRegular(20, 4, 1).edges(), GenerateKRegular(20, 4, 2).edges());
}

TEST(GenerateKRegular, InfeasibleDegrees) {
  try {
    GenerateKRegular(5, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleDegree);
  }
  EXPECT_THROW(GenerateKRegular(4, 4, 1), Error);
}

// W = -w L on a ring has eigenvalues -w (2 - 2 cos(2 pi k / m)).
TEST(SpectralCertificate, RingSpectrumClosedForm) {
  const int m = 10;
  const double w = 0.2;
  const WeightMatrix wm = BuildWeightMatrix(Topology::Ring(m), w);
  std::vector<double> expected;
  for (int k = 0; k < m; ++k) {
    expected.push_back(-w * (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / m)));
  }
  std::sort(expected.begin(), expected.end(), std::greater<double>());
  const auto& cert = wm.certificate();
  ASSERT_TRUE(cert.ok());
  ASSERT_EQ(cert.eigenvalues.size(), expected.size());
  for (int k = 0; k < m; ++k) EXPECT_NEAR(cert.eigenvalues[k], expected[k], 1e-12);
  EXPECT_NEAR(cert.delta2, expected[1], 1e-12);
  EXPECT_DOUBLE_EQ(cert.w_hat, 2.0 * w);
  EXPECT_DOUBLE_EQ(wm.diagonal(0), -2.0 * w);
  ASSERT_EQ(wm.row(0).size(), 2u);
  EXPECT_EQ(wm.row(0)[0].first, 1);
  EXPECT_DOUBLE_EQ(wm.row(0)[0].second, w);
}

TEST(SpectralCertificate, FlagsSmallestEigenvalueBelowMinusOne) {
  // 0.3 on a ring gives delta_m = -1.2.
  const WeightMatrix wm = BuildWeightMatrix(Topology::Ring(10), 0.3, SpectralPolicy::kReport);
  EXPECT_FALSE(wm.certificate().ok());
  EXPECT_TRUE(HasViolation(wm.certificate(), "<= -1"));
  try {
    BuildWeightMatrix(Topology::Ring(10), 0.3, SpectralPolicy::kEnforce);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpectralViolation);
  }
}

TEST(SpectralCertificate, DisconnectedAndNonStochastic) {
  Mat w = Mat::Zero(4, 4);
  w << -0.5, 0.5, 0, 0, 0.5, -0.5, 0, 0, 0, 0, -0.5, 0.5, 0, 0, 0.5, -0.5;
  EXPECT_TRUE(HasViolation(ValidateAssumption2(w), "not simple"));
  Mat v = Mat::Zero(2, 2);
  v << -0.5, 0.4, 0.5, -0.5;
  const auto cert = ValidateAssumption2(v);
  EXPECT_TRUE(HasViolation(cert, "row sum"));
  EXPECT_TRUE(HasViolation(cert, "column sum"));
  Mat neg = Mat::Zero(2, 2);
  neg << 0.5, -0.5, -0.5, 0.5;
  EXPECT_TRUE(HasViolation(ValidateAssumption2(neg), "negative off-diagonal"));
}

TEST(BuildWeightMatrix, Preconditions) {
  try {
    BuildWeightMatrix(Topology(4, {{0, 1}, {2, 3}}), 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDisconnectedTopology);
  }
  try {
    BuildWeightMatrix(Topology::Complete(5), 0.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(EdgeList, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "tdao_edges_test";
  std::filesystem::create_directories(dir);
  const Topology t = GenerateKRegular(12, 3, 5);
  WriteEdgeList(t, dir / "g.txt");
  const Topology back = ReadEdgeList(dir / "g.txt");
  EXPECT_EQ(back.size(), 12);
  EXPECT_EQ(back.edges(), t.edges());
  EXPECT_THROW(ReadEdgeList(dir / "missing.txt"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tdao
