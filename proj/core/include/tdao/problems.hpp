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

// Aggregative problems: agent i owns f_i(x^i, psi), g_i(x^i) and a compact
// convex set X_i; the aggregate is phi(x) = (1/m) sum_i g_i(x^i) and the
// global cost is F(x) = sum_i f_i(x^i, phi(x)).

#ifndef TDAO_PROBLEMS_HPP_
#define TDAO_PROBLEMS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tdao/types.hpp"

namespace tdao {

// Lipschitz-type constants over X (and the admissible psi range). Conservative
// upper bounds are fine everywhere except that lf2 must bound ||grad2 f_i||
// for every psi the iteration can produce, since it sizes the tracker ball.
struct ProblemConstants {
  double lf1 = 0.0;      // Lipschitz constant of f_i in x
  double lf2 = 0.0;      // Lipschitz constant of f_i in psi
  double lf1_bar = 0.0;  // Lipschitz constant of grad f_i in x
  double lf2_bar = 0.0;  // Lipschitz constant of grad f_i in psi
  double lg = 0.0;
  double lg_bar = 0.0;
  double mu = 0.0;       // strong convexity of F; 0 when not strongly convex
  double diam_x = 0.0;   // D_X, diameter of X = X_1 x ... x X_m
  double max_f = 0.0;    // D_f, max_i sup_X |f_i|
  double max_g = 0.0;    // D_g, max_i sup_X ||g_i||
};

class AggregativeProblem {
 public:
  virtual ~AggregativeProblem() = default;

  virtual std::string name() const = 0;
  virtual int num_agents() const = 0;
  virtual int decision_dim(int i) const = 0;
  virtual int aggregate_dim() const = 0;

  virtual double f(int i, const Vec& x, const Vec& psi) const = 0;
  virtual Vec grad1_f(int i, const Vec& x, const Vec& psi) const = 0;
  virtual Vec grad2_f(int i, const Vec& x, const Vec& psi) const = 0;
  virtual Vec g(int i, const Vec& x) const = 0;
  // n_i x d, so that grad g_i(x) * v maps an aggregate-space vector back to
  // decision space.
  virtual Mat grad_g(int i, const Vec& x) const = 0;
  virtual Vec grad_g_times(int i, const Vec& x, const Vec& v) const {
    return grad_g(i, x) * v;
  }
  virtual Vec project(int i, const Vec& point) const = 0;

  // Largest h such that every coordinate move of size h from x stays in the
  // region where f_i and g_i are evaluated by finite differences.
  virtual double boundary_margin(int i, const Vec& x) const = 0;
  // A feasible point with a positive boundary margin, drawn from `seed`.
  virtual Vec interior_point(int i, std::uint64_t seed) const = 0;

  const ProblemConstants& constants() const { return constants_; }

 protected:
  ProblemConstants constants_;
};

using ProblemPtr = std::shared_ptr<const AggregativeProblem>;

// phi(x) = (1/m) sum_i g_i(x^i), folded in agent order.
Vec Aggregate(const AggregativeProblem& p, const AgentVectors& x);
double GlobalCost(const AggregativeProblem& p, const AgentVectors& x);
// grad F(x)^i = grad1 f_i(x^i, phi) + grad g_i(x^i) (1/m) sum_j grad2 f_j(x^j, phi)
AgentVectors GlobalGradient(const AggregativeProblem& p, const AgentVectors& x);
AgentVectors ProjectAll(const AggregativeProblem& p, const AgentVectors& x);

double SquaredNorm(const AgentVectors& v);
double SquaredDistance(const AgentVectors& a, const AgentVectors& b);
// ||x - P_X(x - grad F(x))||, the stationarity measure used by the oracle.
double ProjectedGradientNorm(const AggregativeProblem& p, const AgentVectors& x);

// ---------------------------------------------------------------------------
// EV charging

struct EvModel {
  std::string name;
  double max_rate_kw = 0.0;
  double battery_kwh = 0.0;
};

struct EvChargingSpec {
  int slots = 13;
  std::vector<double> energy;   // E^i
  std::vector<Vec> max_rate;    // x_max^i, one entry per slot
  std::vector<Vec> demand;      // d^i
  double capacity_kw = 0.0;     // C_tot
  double price_coeff = 0.15;
  double price_exponent = 1.5;
  // Load beyond which the price continues linearly (C^1 extension). Zero
  // selects max_{i,k} (m / C_tot)(x_max^i + d^i)_k.
  double price_knee = 0.0;
};

std::vector<EvModel> LoadEvModels(const std::filesystem::path& csv);
Vec LoadDemandProfile(const std::filesystem::path& csv, int slots = 13);

// Models bundled with the library (maximal charging rate, battery capacity)
// and the per-user non-EV demand profile for the 21:00-09:00 window.
std::vector<EvModel> DefaultEvModels();
Vec DefaultDemandProfile();

// `per_model` EVs of every model, each with E^i equal to battery capacity and
// the shared demand profile. C_tot is 12 kW per EV, the population ratio of
// 1.2e8 kW over 1e7 EVs.
EvChargingSpec MakeEvSpec(const std::vector<EvModel>& models, int per_model,
                          const Vec& demand_profile);
EvChargingSpec DefaultEvSpec(int per_model = 2);

// Euclidean projection onto {0 <= x <= x_max, 1^T x = E}. Throws
// kInfeasibleBudget unless 0 <= E <= 1^T x_max.
Vec ProjectBoxBudget(const Vec& point, const Vec& x_max, double energy);

class EvChargingProblem final : public AggregativeProblem {
 public:
  // Throws kInfeasibleSpec when E^i > 1^T x_max^i or any demand is negative.
  explicit EvChargingProblem(EvChargingSpec spec);

  std::string name() const override { return "ev-charging"; }
  int num_agents() const override { return static_cast<int>(spec_.energy.size()); }
  int decision_dim(int) const override { return spec_.slots; }
  int aggregate_dim() const override { return spec_.slots; }

  double f(int i, const Vec& x, const Vec& psi) const override;
  Vec grad1_f(int i, const Vec& x, const Vec& psi) const override;
  Vec grad2_f(int i, const Vec& x, const Vec& psi) const override;
  Vec g(int i, const Vec& x) const override;
  Mat grad_g(int i, const Vec& x) const override;
  Vec grad_g_times(int i, const Vec& x, const Vec& v) const override;
  Vec project(int i, const Vec& point) const override;
  double boundary_margin(int i, const Vec& x) const override;
  Vec interior_point(int i, std::uint64_t seed) const override;

  const EvChargingSpec& spec() const { return spec_; }
  double scale() const { return scale_; }  // m / C_tot
  double price_knee() const { return knee_; }

  // Elementwise price and its derivative, including the extension.
  Vec Price(const Vec& load) const;
  Vec PriceSlope(const Vec& load) const;

  // Copy of the problem with agent i's reported demand replaced; the price
  // knee is kept so both instances share one price function.
  EvChargingProblem WithDemand(int i, const Vec& demand) const;

 private:
  double PriceAt(double r) const;
  double SlopeAt(double r) const;

  EvChargingSpec spec_;
  double scale_ = 0.0;
  double knee_ = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic instances

enum class SyntheticKind { kStronglyConvex, kConvex, kNonconvex };

std::string_view SyntheticKindName(SyntheticKind kind);
SyntheticKind ParseSyntheticKind(std::string_view name);

// f_i = s_i(x) + h_R(psi - b_i), g_i = A_i x + c_i, X_i = [lo, hi]^n, with
//   strongly convex: s_i = 0.5 ||x - a_i||^2
//   convex:          s_i = <q_i, x>
//   nonconvex:       s_i = <q_i, x> + kappa sum_j sin(x_j)
// h_R is the norm-Huber function: 0.5 ||z||^2 for ||z|| <= R and linear
// beyond. R is chosen above every ||phi - b_i|| reachable on X, so F on X is
// the quadratic model while ||grad2 f_i|| <= R holds for every psi.
struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::kStronglyConvex;
  double lo = -1.0;
  double hi = 1.0;
  double kappa = 0.0;
  std::vector<Vec> a;  // strongly convex anchor
  std::vector<Vec> q;  // linear term (convex, nonconvex)
  std::vector<Vec> b;
  std::vector<Mat> A;  // d x n
  std::vector<Vec> c;
  double huber_radius = 0.0;  // 0 selects the automatic radius
};

class SyntheticProblem final : public AggregativeProblem {
 public:
  explicit SyntheticProblem(SyntheticParams params);

  std::string name() const override;
  int num_agents() const override { return static_cast<int>(params_.A.size()); }
  int decision_dim(int) const override { return static_cast<int>(params_.A[0].cols()); }
  int aggregate_dim() const override { return static_cast<int>(params_.A[0].rows()); }

  double f(int i, const Vec& x, const Vec& psi) const override;
  Vec grad1_f(int i, const Vec& x, const Vec& psi) const override;
  Vec grad2_f(int i, const Vec& x, const Vec& psi) const override;
  Vec g(int i, const Vec& x) const override;
  Mat grad_g(int i, const Vec& x) const override;
  Vec project(int i, const Vec& point) const override;
  double boundary_margin(int i, const Vec& x) const override;
  Vec interior_point(int i, std::uint64_t seed) const override;

  const SyntheticParams& params() const { return params_; }
  double huber_radius() const { return radius_; }

 private:
  SyntheticParams params_;
  double radius_ = 0.0;
};

// Coefficients drawn deterministically from `seed`. Box [-1, 1] for the
// convex kinds, [-2, 2] with kappa = 0.5 for the nonconvex one.
SyntheticProblem MakeSyntheticProblem(SyntheticKind kind, int num_agents,
                                      int decision_dim, int aggregate_dim,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Ground truth and gradient checks

struct OracleSolution {
  AgentVectors x;
  double cost = 0.0;
  int iterations = 0;
  double projected_gradient_norm = 0.0;
  bool converged = false;
};

// Projected gradient descent on F with Armijo backtracking, started from the
// projection of zero. Stops once the projected-gradient norm drops below tol.
OracleSolution CentralizedOracle(const AggregativeProblem& p, double tol,
                                 int max_iters,
                                 const AgentVectors* start = nullptr);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string component;  // "grad1_f", "grad2_f" or "grad_g"
  int agent = 0;
  int coordinate = 0;
};

// Central differences of f_i in x and psi and of g_i in x at the given
// points. Errors are relative to the larger of the analytic and numeric
// infinity norms (absolute when both are below 1e-8). Throws
// kPointTooCloseToBoundary when any x^i is within h of its boundary and
// kInvalidArgument when h lies outside [1e-7, 1e-4].
FiniteDiffReport FiniteDiffCheck(const AggregativeProblem& p,
                                 const AgentVectors& x, const AgentVectors& psi,
                                 double h);

}  // namespace tdao

#endif  // TDAO_PROBLEMS_HPP_
