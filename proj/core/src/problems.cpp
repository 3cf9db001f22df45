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

#include "tdao/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "tdao/error.hpp"

namespace tdao {

namespace {

// Safety factor on the analytic EV constants.
constexpr double kMargin = 1.1;

void CheckAgent(const AggregativeProblem& p, const AgentVectors& x) {
  if (static_cast<int>(x.size()) != p.num_agents()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("expected {} agent vectors, got {}", p.num_agents(),
                            x.size()));
  }
  for (int i = 0; i < p.num_agents(); ++i) {
    if (x[i].size() != p.decision_dim(i)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("agent {}: expected dimension {}, got {}", i,
                              p.decision_dim(i), x[i].size()));
    }
  }
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

bool ParseDouble(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  *out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool SkipLine(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

double SpectralNorm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

}  // namespace

Vec Aggregate(const AggregativeProblem& p, const AgentVectors& x) {
  CheckAgent(p, x);
  Vec phi = Vec::Zero(p.aggregate_dim());
  for (int i = 0; i < p.num_agents(); ++i) phi += p.g(i, x[i]);
  return phi / p.num_agents();
}

double GlobalCost(const AggregativeProblem& p, const AgentVectors& x) {
  const Vec phi = Aggregate(p, x);
  double total = 0.0;
  for (int i = 0; i < p.num_agents(); ++i) total += p.f(i, x[i], phi);
  return total;
}

AgentVectors GlobalGradient(const AggregativeProblem& p, const AgentVectors& x) {
  const Vec phi = Aggregate(p, x);
  const int m = p.num_agents();
  Vec mean_grad2 = Vec::Zero(p.aggregate_dim());
  for (int j = 0; j < m; ++j) mean_grad2 += p.grad2_f(j, x[j], phi);
  mean_grad2 /= m;
  AgentVectors out(m);
  for (int i = 0; i < m; ++i) {
    out[i] = p.grad1_f(i, x[i], phi) + p.grad_g_times(i, x[i], mean_grad2);
  }
  return out;
}

AgentVectors ProjectAll(const AggregativeProblem& p, const AgentVectors& x) {
  CheckAgent(p, x);
  AgentVectors out(x.size());
  for (int i = 0; i < p.num_agents(); ++i) out[i] = p.project(i, x[i]);
  return out;
}

double SquaredNorm(const AgentVectors& v) {
  double s = 0.0;
  for (const Vec& vi : v) s += vi.squaredNorm();
  return s;
}

double SquaredDistance(const AgentVectors& a, const AgentVectors& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return s;
}

double ProjectedGradientNorm(const AggregativeProblem& p, const AgentVectors& x) {
  const AgentVectors grad = GlobalGradient(p, x);
  double s = 0.0;
  for (int i = 0; i < p.num_agents(); ++i) {
    s += (x[i] - p.project(i, x[i] - grad[i])).squaredNorm();
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

Vec ProjectBoxBudget(const Vec& point, const Vec& x_max, double energy) {
  if (point.size() != x_max.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "point and x_max differ in size");
  }
  const double cap = x_max.sum();
  if (!(energy >= 0.0) || energy > cap * (1.0 + 1e-15) || (x_max.array() < 0.0).any()) {
    throw Error(ErrorCode::kInfeasibleBudget,
                fmt::format("need 0 <= E <= 1^T x_max (E = {}, 1^T x_max = {})",
                            energy, cap));
  }
  const int k = static_cast<int>(point.size());
  auto clipped = [&](double theta) {
    return (point.array() - theta).max(0.0).min(x_max.array()).matrix().eval();
  };
  if (energy >= cap) return x_max;
  if (energy == 0.0) return Vec::Zero(k);

  // sum(clip(point - theta)) is non-increasing in theta; bracket the root.
  double lo = point.minCoeff() - x_max.maxCoeff() - 1.0;
  double hi = point.maxCoeff() + 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (clipped(mid).sum() > energy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Exact theta on the active set found by bisection.
  double theta = 0.5 * (lo + hi);
  Vec x = clipped(theta);
  double fixed = 0.0;
  double free_sum = 0.0;
  int free_count = 0;
  for (int j = 0; j < k; ++j) {
    const double v = point(j) - theta;
    if (v >= x_max(j)) {
      fixed += x_max(j);
    } else if (v > 0.0) {
      free_sum += point(j);
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum - (energy - fixed)) / free_count;
    const Vec refined = clipped(exact);
    if (std::abs(refined.sum() - energy) <= std::abs(x.sum() - energy)) {
      x = refined;
    }
  }
  return x;
}

std::vector<EvModel> LoadEvModels(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + csv.string());
  std::vector<EvModel> models;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkipLine(line)) continue;
    const auto fields = SplitCsv(line);
    EvModel model;
    if (fields.size() != 3) {
      throw Error(ErrorCode::kIo,
                  fmt::format("{}:{}: expected 3 columns", csv.string(), line_no));
    }
    if (!ParseDouble(fields[1], &model.max_rate_kw) ||
        !ParseDouble(fields[2], &model.battery_kwh)) {
      if (models.empty()) continue;  // header
      throw Error(ErrorCode::kIo,
                  fmt::format("{}:{}: malformed number", csv.string(), line_no));
    }
    model.name = fields[0];
    models.push_back(model);
  }
  if (models.empty()) throw Error(ErrorCode::kIo, csv.string() + ": no models");
  return models;
}

Vec LoadDemandProfile(const std::filesystem::path& csv, int slots) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + csv.string());
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkipLine(line)) continue;
    const auto fields = SplitCsv(line);
    double v = 0.0;
    if (!ParseDouble(fields.back(), &v)) {
      if (values.empty()) continue;  // header
      throw Error(ErrorCode::kIo,
                  fmt::format("{}:{}: malformed number", csv.string(), line_no));
    }
    values.push_back(v);
  }
  if (static_cast<int>(values.size()) != slots) {
    throw Error(ErrorCode::kIo, fmt::format("{}: expected {} slots, found {}",
                                            csv.string(), slots, values.size()));
  }
  return Eigen::Map<Vec>(values.data(), slots);
}

std::vector<EvModel> DefaultEvModels() {
  return {
      {"Maserati GranCabrio Folgore", 22.0, 83.0},
      {"Audi A6 Avant e-tron", 11.0, 75.0},
      {"Mercedes-Benz EQE 300", 11.0, 89.0},
      {"BMW i5 xDrive40 Sedan", 11.0, 81.0},
      {"Kia EV3 Long Range", 11.0, 78.0},
      {"Nissan Ariya", 7.4, 87.0},
      {"Volkswagen ID.4 Pro", 11.0, 77.0},
      {"BYD HAN", 11.0, 85.0},
      {"Tesla Model Y Performance", 11.0, 75.0},
      {"Hongqi E-HS9 84 kWh", 11.0, 78.0},
  };
}

Vec DefaultDemandProfile() {
  Vec d(13);
  d << 10.4, 9.9, 9.2, 8.5, 8.0, 7.6, 7.3, 7.2, 7.3, 7.6, 8.0, 8.5, 9.0;
  return d;
}

EvChargingSpec MakeEvSpec(const std::vector<EvModel>& models, int per_model,
                          const Vec& demand_profile) {
  if (per_model < 1 || models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need >= 1 model and >= 1 EV each");
  }
  EvChargingSpec spec;
  spec.slots = static_cast<int>(demand_profile.size());
  for (const EvModel& model : models) {
    for (int r = 0; r < per_model; ++r) {
      spec.energy.push_back(model.battery_kwh);
      spec.max_rate.push_back(Vec::Constant(spec.slots, model.max_rate_kw));
      spec.demand.push_back(demand_profile);
    }
  }
  spec.capacity_kw = 12.0 * static_cast<double>(spec.energy.size());
  return spec;
}

EvChargingSpec DefaultEvSpec(int per_model) {
  return MakeEvSpec(DefaultEvModels(), per_model, DefaultDemandProfile());
}

EvChargingProblem::EvChargingProblem(EvChargingSpec spec) : spec_(std::move(spec)) {
  const int m = static_cast<int>(spec_.energy.size());
  if (m < 1 || spec_.slots < 1) {
    throw Error(ErrorCode::kInfeasibleSpec, "EV spec needs agents and slots");
  }
  if (static_cast<int>(spec_.max_rate.size()) != m ||
      static_cast<int>(spec_.demand.size()) != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "energy, max_rate and demand must list every EV");
  }
  if (!(spec_.capacity_kw > 0.0) || !(spec_.price_coeff > 0.0) ||
      !(spec_.price_exponent > 1.0)) {
    throw Error(ErrorCode::kInfeasibleSpec,
                "need C_tot > 0, price coefficient > 0 and exponent > 1");
  }
  for (int i = 0; i < m; ++i) {
    if (spec_.max_rate[i].size() != spec_.slots ||
        spec_.demand[i].size() != spec_.slots) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("EV {}: profiles must have {} slots", i, spec_.slots));
    }
    if ((spec_.max_rate[i].array() < 0.0).any() ||
        (spec_.demand[i].array() < 0.0).any() || spec_.energy[i] < 0.0) {
      throw Error(ErrorCode::kInfeasibleSpec,
                  fmt::format("EV {}: negative rate, demand or energy", i));
    }
    if (spec_.energy[i] > spec_.max_rate[i].sum()) {
      throw Error(ErrorCode::kInfeasibleSpec,
                  fmt::format("EV {}: E = {} exceeds 1^T x_max = {}", i,
                              spec_.energy[i], spec_.max_rate[i].sum()));
    }
  }
  scale_ = m / spec_.capacity_kw;

  double peak_load = 0.0;
  double norm_top = 0.0;
  double entry_top = 0.0;
  double sum_top = 0.0;
  double min_demand = std::numeric_limits<double>::infinity();
  double box_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec top = spec_.max_rate[i] + spec_.demand[i];
    peak_load = std::max(peak_load, scale_ * top.maxCoeff());
    norm_top = std::max(norm_top, top.norm());
    entry_top = std::max(entry_top, top.maxCoeff());
    sum_top = std::max(sum_top, top.sum());
    min_demand = std::min(min_demand, spec_.demand[i].minCoeff());
    box_sq += spec_.max_rate[i].squaredNorm();
  }
  knee_ = spec_.price_knee > 0.0 ? spec_.price_knee : peak_load;
  if (!(knee_ > 0.0)) {
    throw Error(ErrorCode::kInfeasibleSpec, "all loads are zero");
  }

  // Bounds over X with psi anywhere (the extended price has slope at most
  // p'(knee)); the curvature bound uses psi >= psi_min = scale * min demand.
  const double e = spec_.price_exponent;
  const double c = spec_.price_coeff;
  const double psi_min = std::max(scale_ * min_demand, 1e-3 * knee_);
  const double curvature = c * e * (e - 1.0) *
                           std::max(std::pow(psi_min, e - 2.0), std::pow(knee_, e - 2.0));
  ProblemConstants& k = constants_;
  k.lf2 = kMargin * SlopeAt(knee_) * norm_top;
  k.lf1 = kMargin * PriceAt(knee_) * std::sqrt(static_cast<double>(spec_.slots));
  k.lf1_bar = kMargin * SlopeAt(knee_);
  k.lf2_bar = kMargin * std::hypot(SlopeAt(knee_), curvature * entry_top);
  k.lg = kMargin * scale_;
  k.lg_bar = 0.0;
  k.mu = 0.0;
  k.diam_x = kMargin * std::sqrt(box_sq);
  k.max_f = kMargin * PriceAt(knee_) * sum_top;
  k.max_g = kMargin * scale_ * norm_top;
}

double EvChargingProblem::PriceAt(double r) const {
  const double c = spec_.price_coeff;
  const double e = spec_.price_exponent;
  if (r <= 0.0) return 0.0;
  if (r <= knee_) return c * std::pow(r, e);
  return c * std::pow(knee_, e) + c * e * std::pow(knee_, e - 1.0) * (r - knee_);
}

double EvChargingProblem::SlopeAt(double r) const {
  const double c = spec_.price_coeff;
  const double e = spec_.price_exponent;
  if (r <= 0.0) return 0.0;
  return c * e * std::pow(std::min(r, knee_), e - 1.0);
}

Vec EvChargingProblem::Price(const Vec& load) const {
  return load.unaryExpr([this](double r) { return PriceAt(r); });
}

Vec EvChargingProblem::PriceSlope(const Vec& load) const {
  return load.unaryExpr([this](double r) { return SlopeAt(r); });
}

double EvChargingProblem::f(int i, const Vec& x, const Vec& psi) const {
  return Price(psi).dot(x + spec_.demand[i]);
}

Vec EvChargingProblem::grad1_f(int, const Vec&, const Vec& psi) const {
  return Price(psi);
}

Vec EvChargingProblem::grad2_f(int i, const Vec& x, const Vec& psi) const {
  return PriceSlope(psi).cwiseProduct(x + spec_.demand[i]);
}

Vec EvChargingProblem::g(int i, const Vec& x) const {
  return scale_ * (x + spec_.demand[i]);
}

Mat EvChargingProblem::grad_g(int, const Vec&) const {
  return scale_ * Mat::Identity(spec_.slots, spec_.slots);
}

Vec EvChargingProblem::grad_g_times(int, const Vec&, const Vec& v) const {
  return scale_ * v;
}

Vec EvChargingProblem::project(int i, const Vec& point) const {
  return ProjectBoxBudget(point, spec_.max_rate[i], spec_.energy[i]);
}

double EvChargingProblem::boundary_margin(int i, const Vec& x) const {
  return std::min(x.minCoeff(), (spec_.max_rate[i] - x).minCoeff());
}

Vec EvChargingProblem::interior_point(int i, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec& cap = spec_.max_rate[i];
  Vec raw(spec_.slots);
  for (int k = 0; k < spec_.slots; ++k) raw(k) = unit(rng) * cap(k);
  const Vec center = cap * (spec_.energy[i] / cap.sum());
  return 0.5 * (center + project(i, raw));
}

EvChargingProblem EvChargingProblem::WithDemand(int i, const Vec& demand) const {
  EvChargingSpec spec = spec_;
  spec.demand.at(i) = demand;
  spec.price_knee = knee_;
  return EvChargingProblem(std::move(spec));
}

// ---------------------------------------------------------------------------

std::string_view SyntheticKindName(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kStronglyConvex:
      return "strongly-convex";
    case SyntheticKind::kConvex:
      return "convex";
    case SyntheticKind::kNonconvex:
      return "nonconvex";
  }
  return "unknown";
}

SyntheticKind ParseSyntheticKind(std::string_view name) {
  if (name == "strongly-convex" || name == "sc") return SyntheticKind::kStronglyConvex;
  if (name == "convex" || name == "cvx") return SyntheticKind::kConvex;
  if (name == "nonconvex" || name == "ncvx") return SyntheticKind::kNonconvex;
  throw Error(ErrorCode::kConfig, "unknown synthetic kind '" + std::string(name) + "'");
}

SyntheticProblem::SyntheticProblem(SyntheticParams params) : params_(std::move(params)) {
  const int m = static_cast<int>(params_.A.size());
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "synthetic problem needs agents");
  if (!(params_.hi > params_.lo)) {
    throw Error(ErrorCode::kInvalidArgument, "box needs lo < hi");
  }
  const int n = static_cast<int>(params_.A[0].cols());
  const int d = static_cast<int>(params_.A[0].rows());
  if (n < 1 || d < 1) throw Error(ErrorCode::kInvalidArgument, "dimensions must be >= 1");
  const bool strongly = params_.kind == SyntheticKind::kStronglyConvex;
  auto check = [&](const std::vector<Vec>& v, int dim, const char* what) {
    if (static_cast<int>(v.size()) != m) {
      throw Error(ErrorCode::kDimensionMismatch, fmt::format("{} must list {} agents", what, m));
    }
    for (const Vec& vi : v) {
      if (vi.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, fmt::format("{} has wrong dimension", what));
      }
    }
  };
  if (strongly) {
    check(params_.a, n, "a");
  } else {
    check(params_.q, n, "q");
  }
  check(params_.b, d, "b");
  check(params_.c, d, "c");
  for (const Mat& a : params_.A) {
    if (a.rows() != d || a.cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "every A_i must be d x n");
    }
  }

  const double box = std::max(std::abs(params_.lo), std::abs(params_.hi));
  const double x_bound = box * std::sqrt(static_cast<double>(n));
  double g_bound = 0.0;
  double lg = 0.0;
  double b_bound = 0.0;
  double lin_bound = 0.0;
  for (int i = 0; i < m; ++i) {
    const double op = SpectralNorm(params_.A[i]);
    lg = std::max(lg, op);
    g_bound = std::max(g_bound, op * x_bound + params_.c[i].norm());
    b_bound = std::max(b_bound, params_.b[i].norm());
    lin_bound = std::max(lin_bound, strongly ? x_bound + params_.a[i].norm()
                                             : params_.q[i].norm());
  }
  const double reach = g_bound + b_bound;
  radius_ = params_.huber_radius > 0.0 ? params_.huber_radius : 2.0 * reach + 1.0;

  ProblemConstants& k = constants_;
  const double kappa = params_.kind == SyntheticKind::kNonconvex ? params_.kappa : 0.0;
  k.lf1 = lin_bound + kappa * std::sqrt(static_cast<double>(n));
  k.lf2 = radius_;
  k.lf1_bar = strongly ? 1.0 : kappa;
  k.lf2_bar = 1.0;
  k.lg = lg;
  k.lg_bar = 0.0;
  k.mu = strongly ? 1.0 : 0.0;
  k.diam_x = (params_.hi - params_.lo) * std::sqrt(static_cast<double>(m) * n);
  const double huber_top = 0.5 * std::min(reach, radius_) * std::min(reach, radius_);
  k.max_f = (strongly ? 0.5 * lin_bound * lin_bound : lin_bound * x_bound) +
            kappa * n + huber_top;
  k.max_g = g_bound;
}

std::string SyntheticProblem::name() const {
  return "synthetic-" + std::string(SyntheticKindName(params_.kind));
}

double SyntheticProblem::f(int i, const Vec& x, const Vec& psi) const {
  double smooth = 0.0;
  switch (params_.kind) {
    case SyntheticKind::kStronglyConvex:
      smooth = 0.5 * (x - params_.a[i]).squaredNorm();
      break;
    case SyntheticKind::kConvex:
      smooth = params_.q[i].dot(x);
      break;
    case SyntheticKind::kNonconvex:
      smooth = params_.q[i].dot(x) + params_.kappa * x.array().sin().sum();
      break;
  }
  const double r = (psi - params_.b[i]).norm();
  const double huber = r <= radius_ ? 0.5 * r * r : radius_ * r - 0.5 * radius_ * radius_;
  return smooth + huber;
}

Vec SyntheticProblem::grad1_f(int i, const Vec& x, const Vec&) const {
  switch (params_.kind) {
    case SyntheticKind::kStronglyConvex:
      return x - params_.a[i];
    case SyntheticKind::kConvex:
      return params_.q[i];
    case SyntheticKind::kNonconvex:
      return params_.q[i] + params_.kappa * x.array().cos().matrix();
  }
  return Vec();
}

Vec SyntheticProblem::grad2_f(int i, const Vec&, const Vec& psi) const {
  const Vec z = psi - params_.b[i];
  const double r = z.norm();
  return r <= radius_ ? z : Vec(z * (radius_ / r));
}

Vec SyntheticProblem::g(int i, const Vec& x) const {
  return params_.A[i] * x + params_.c[i];
}

Mat SyntheticProblem::grad_g(int i, const Vec&) const {
  return params_.A[i].transpose();
}

Vec SyntheticProblem::project(int, const Vec& point) const {
  return point.cwiseMax(params_.lo).cwiseMin(params_.hi);
}

double SyntheticProblem::boundary_margin(int, const Vec& x) const {
  return std::min((x.array() - params_.lo).minCoeff(),
                  (params_.hi - x.array()).minCoeff());
}

Vec SyntheticProblem::interior_point(int, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const double pad = 0.1 * (params_.hi - params_.lo);
  std::uniform_real_distribution<double> unit(params_.lo + pad, params_.hi - pad);
  Vec x(decision_dim(0));
  for (int j = 0; j < x.size(); ++j) x(j) = unit(rng);
  return x;
}

SyntheticProblem MakeSyntheticProblem(SyntheticKind kind, int num_agents,
                                      int decision_dim, int aggregate_dim,
                                      std::uint64_t seed) {
  if (num_agents < 1 || decision_dim < 1 || aggregate_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dimensions must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  auto draw = [&](int rows, int cols, double sd) {
    Mat out(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) out(r, c) = sd * normal(rng);
    }
    return out;
  };

  SyntheticParams p;
  p.kind = kind;
  if (kind == SyntheticKind::kNonconvex) {
    p.lo = -2.0;
    p.hi = 2.0;
    p.kappa = 0.5;
  }
  const double coupling = 1.0 / std::sqrt(static_cast<double>(decision_dim));
  for (int i = 0; i < num_agents; ++i) {
    p.A.push_back(draw(aggregate_dim, decision_dim, coupling));
    p.c.push_back(draw(aggregate_dim, 1, 0.5));
    p.b.push_back(draw(aggregate_dim, 1, 0.5));
    if (kind == SyntheticKind::kStronglyConvex) {
      Vec a(decision_dim);
      for (int j = 0; j < decision_dim; ++j) a(j) = 0.8 * uniform(rng);
      p.a.push_back(a);
    } else {
      p.q.push_back(draw(decision_dim, 1, kind == SyntheticKind::kConvex ? 1.0 : 0.3));
    }
  }
  return SyntheticProblem(std::move(p));
}

// ---------------------------------------------------------------------------

OracleSolution CentralizedOracle(const AggregativeProblem& p, double tol,
                                 int max_iters, const AgentVectors* start) {
  const int m = p.num_agents();
  OracleSolution sol;
  if (start != nullptr) {
    sol.x = ProjectAll(p, *start);
  } else {
    sol.x.resize(m);
    for (int i = 0; i < m; ++i) sol.x[i] = p.project(i, Vec::Zero(p.decision_dim(i)));
  }
  double cost = GlobalCost(p, sol.x);
  double lipschitz = 1.0;
  AgentVectors grad = GlobalGradient(p, sol.x);
  AgentVectors trial(m), trial_grad;
  for (sol.iterations = 0; sol.iterations < max_iters; ++sol.iterations) {
    double pg = 0.0;
    for (int i = 0; i < m; ++i) {
      pg += (sol.x[i] - p.project(i, sol.x[i] - grad[i])).squaredNorm();
    }
    sol.projected_gradient_norm = std::sqrt(pg);
    if (sol.projected_gradient_norm < tol) {
      sol.converged = true;
      break;
    }
    // Backtrack until the quadratic upper model holds and the local gradient
    // change is within L ||dx||. Near the optimum F changes below its own
    // rounding and only the second test still rejects overshooting steps.
    double trial_cost = cost;
    for (;;) {
      double linear = 0.0;
      double step_sq = 0.0;
      for (int i = 0; i < m; ++i) {
        trial[i] = p.project(i, sol.x[i] - grad[i] / lipschitz);
        const Vec dx = trial[i] - sol.x[i];
        linear += grad[i].dot(dx);
        step_sq += dx.squaredNorm();
      }
      trial_cost = GlobalCost(p, trial);
      trial_grad = GlobalGradient(p, trial);
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(cost);
      const bool model_ok = trial_cost <= cost + linear + 0.5 * lipschitz * step_sq + slack;
      const bool curvature_ok =
          std::sqrt(SquaredDistance(trial_grad, grad)) <= lipschitz * std::sqrt(step_sq);
      if (model_ok && curvature_ok) break;
      lipschitz *= 2.0;
      if (lipschitz > 1e30) break;
    }
    sol.x.swap(trial);
    grad.swap(trial_grad);
    cost = trial_cost;
    lipschitz = std::max(lipschitz * 0.5, 1e-12);
  }
  sol.cost = GlobalCost(p, sol.x);
  if (!sol.converged) sol.projected_gradient_norm = ProjectedGradientNorm(p, sol.x);
  return sol;
}

FiniteDiffReport FiniteDiffCheck(const AggregativeProblem& p,
                                 const AgentVectors& x, const AgentVectors& psi,
                                 double h) {
  if (!(h >= 1e-7 && h <= 1e-4)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("step h = {} outside [1e-7, 1e-4]", h));
  }
  CheckAgent(p, x);
  if (static_cast<int>(psi.size()) != p.num_agents()) {
    throw Error(ErrorCode::kDimensionMismatch, "one psi point per agent required");
  }
  FiniteDiffReport report;
  auto consider = [&](const Vec& analytic, const Vec& numeric, const char* what,
                      int agent) {
    const double scale = std::max(analytic.lpNorm<Eigen::Infinity>(),
                                  numeric.lpNorm<Eigen::Infinity>());
    const Vec diff = (analytic - numeric).cwiseAbs();
    Eigen::Index worst = 0;
    const double err = diff.maxCoeff(&worst) / (scale < 1e-8 ? 1.0 : scale);
    if (report.component.empty() || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.component = what;
      report.agent = agent;
      report.coordinate = static_cast<int>(worst);
    }
  };

  for (int i = 0; i < p.num_agents(); ++i) {
    const Vec& xi = x[i];
    const Vec& si = psi[i];
    if (si.size() != p.aggregate_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "psi point has wrong dimension");
    }
    const double margin = p.boundary_margin(i, xi);
    if (!(margin > h)) {
      throw Error(ErrorCode::kPointTooCloseToBoundary,
                  fmt::format("agent {}: boundary margin {} <= h = {}", i, margin, h));
    }
    const int n = static_cast<int>(xi.size());
    const int d = static_cast<int>(si.size());

    Vec fd1(n);
    Mat fdg(n, d);
    for (int j = 0; j < n; ++j) {
      Vec up = xi;
      Vec down = xi;
      up(j) += h;
      down(j) -= h;
      fd1(j) = (p.f(i, up, si) - p.f(i, down, si)) / (2.0 * h);
      fdg.row(j) = ((p.g(i, up) - p.g(i, down)) / (2.0 * h)).transpose();
    }
    Vec fd2(d);
    for (int k = 0; k < d; ++k) {
      Vec up = si;
      Vec down = si;
      up(k) += h;
      down(k) -= h;
      fd2(k) = (p.f(i, xi, up) - p.f(i, xi, down)) / (2.0 * h);
    }
    consider(p.grad1_f(i, xi, si), fd1, "grad1_f", i);
    consider(p.grad2_f(i, xi, si), fd2, "grad2_f", i);
    const Mat jac = p.grad_g(i, xi);
    consider(Eigen::Map<const Vec>(jac.data(), jac.size()),
             Eigen::Map<const Vec>(fdg.data(), fdg.size()), "grad_g", i);
  }
  return report;
}

}  // namespace tdao
