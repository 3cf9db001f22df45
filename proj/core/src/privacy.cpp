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

#include "tdao/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/special_functions/zeta.hpp>
#include <fmt/format.h>

#include "tdao/error.hpp"

namespace tdao {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Exponents {
  double u, v, w1, w2;
  double zeta_min, zeta_max, xi_min, xi_max;
};

Exponents ExponentsOf(const ScheduleSet& s, int agents) {
  const auto z = s.noise.zeta_extremes(agents);
  const auto x = s.noise.xi_extremes(agents);
  return {s.lambda.exponent, s.alpha.exponent, s.gamma1.exponent,
          s.gamma2.exponent, z.min_exponent,   z.max_exponent,
          x.min_exponent,    x.max_exponent};
}

class CheckList {
 public:
  void Greater(std::string name, double lhs, double rhs) {
    checks_.push_back({std::move(name), lhs, rhs, lhs > rhs});
  }
  std::vector<InequalityCheck> Take() { return std::move(checks_); }

 private:
  std::vector<InequalityCheck> checks_;
};

void AddTruthfulConditions(CheckList& c, const Exponents& e, const ScheduleSet& s,
                           std::optional<double> w_hat) {
  c.Greater("u > w1 + w2 + max sigma_xi exp + 1", e.u, e.w1 + e.w2 + e.xi_max + 1.0);
  c.Greater("v > u - w1", e.v, e.u - e.w1);
  c.Greater("w1 > 1 + max sigma_zeta exp", e.w1, 1.0 + e.zeta_max);
  c.Greater("1 > w2", 1.0, e.w2);
  if (w_hat) {
    c.Greater("w_hat gamma2 > u - w1 - w2", *w_hat * s.gamma2.base, e.u - e.w1 - e.w2);
  }
}

void AddConvergenceCommon(CheckList& c, const Exponents& e) {
  c.Greater("1 > u", 1.0, e.u);
  c.Greater("1 > v", 1.0, e.v);
  c.Greater("1 > w1", 1.0, e.w1);
  c.Greater("1 > w2", 1.0, e.w2);
  c.Greater("min sigma_zeta exp > 0", e.zeta_min, 0.0);
  c.Greater("1 > max sigma_zeta exp", 1.0, e.zeta_max);
  c.Greater("min sigma_xi exp > 0", e.xi_min, 0.0);
  c.Greater("1 > max sigma_xi exp", 1.0, e.xi_max);
}

void AddAttenuatedXiCondition(CheckList& c, const Exponents& e) {
  c.Greater("1 > max sigma_xi exp", 1.0, e.xi_max);
  c.Greater("sigma_xi exp > max{-w2/2, 1/2 - w2}", e.xi_min,
            std::max(-e.w2 / 2.0, 0.5 - e.w2));
}

double PsiExponent(const Exponents& e) { return e.u - e.w1 - e.w2 - e.xi_max; }
double YExponent(const Exponents& e) { return e.w1 - e.zeta_max; }

void RequireTruthful(const ScheduleSet& s, int agents) {
  const RegimeConditions r = CheckRegime(s, Regime::kT2Truthful, agents);
  if (!r.passes()) {
    std::string joined;
    for (const auto& f : r.failures()) joined += (joined.empty() ? "" : "; ") + f;
    throw Error(ErrorCode::kRegimeViolation,
                "truthful regime violated, the budget would be unbounded: " + joined);
  }
}

// Coefficients of the two series: term_t = A (t+1)^-p + B (t+1)^-q.
struct Series {
  double a, p, b, q;
  double c1, c2;
  NoiseSchedule::Extremes xi, zeta;
};

Series SeriesOf(const ScheduleSet& s, double w_hat, int agents) {
  const Exponents e = ExponentsOf(s, agents);
  Series out;
  out.c1 = C1(s, w_hat);
  out.c2 = C2(e.w1, w_hat);
  out.xi = s.noise.xi_extremes(agents);
  out.zeta = s.noise.zeta_extremes(agents);
  out.a = std::numbers::sqrt2 * out.c1 * s.lambda.base /
          (out.xi.min_base * s.gamma1.base * s.gamma2.base);
  out.p = PsiExponent(e);
  out.b = std::numbers::sqrt2 * out.c2 * s.gamma1.base / out.zeta.min_base;
  out.q = YExponent(e);
  return out;
}

// sum_{t=1}^{T} (t+1)^-p
double PowerSum(double p, Iteration T) {
  CompensatedSum sum;
  for (Iteration t = 1; t <= T; ++t) sum.Add(std::pow(static_cast<double>(t) + 1.0, -p));
  return sum.value();
}

constexpr Iteration kPartialTerms = 1'000'000;

}  // namespace

std::string_view RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kT1StronglyConvex: return "T1-strongly-convex";
    case Regime::kT1Convex: return "T1-convex";
    case Regime::kT1Nonconvex: return "T1-nonconvex";
    case Regime::kT2Truthful: return "T2-truthful";
    case Regime::kT3StronglyConvex: return "T3-sc";
    case Regime::kT3Convex: return "T3-convex";
    case Regime::kT3Nonconvex: return "T3-nonconvex";
  }
  return "unknown";
}

Regime ParseRegime(std::string_view name) {
  for (Regime r : AllRegimes()) {
    if (RegimeName(r) == name) return r;
  }
  if (name == "T1-sc") return Regime::kT1StronglyConvex;
  if (name == "T3-strongly-convex") return Regime::kT3StronglyConvex;
  throw Error(ErrorCode::kConfig, "unknown regime '" + std::string(name) + "'");
}

std::vector<Regime> AllRegimes() {
  return {Regime::kT1StronglyConvex, Regime::kT1Convex,  Regime::kT1Nonconvex,
          Regime::kT2Truthful,       Regime::kT3StronglyConvex,
          Regime::kT3Convex,         Regime::kT3Nonconvex};
}

bool RegimeConditions::passes() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const InequalityCheck& c) { return c.satisfied; });
}

std::vector<std::string> RegimeConditions::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.satisfied) out.push_back(fmt::format("{} ({:.6g} vs {:.6g})", c.name, c.lhs, c.rhs));
  }
  return out;
}

RegimeConditions CheckRegime(const ScheduleSet& s, Regime regime, int agents,
                             std::optional<double> w_hat) {
  const Exponents e = ExponentsOf(s, agents);
  CheckList c;
  switch (regime) {
    case Regime::kT1StronglyConvex:
      AddConvergenceCommon(c, e);
      c.Greater("u > w2", e.u, e.w2);
      c.Greater("v > w2", e.v, e.w2);
      c.Greater("sigma_zeta exp > max{w1, w2/2}", e.zeta_min, std::max(e.w1, e.w2 / 2.0));
      c.Greater("sigma_xi exp > v/2 - w2", e.xi_min, e.v / 2.0 - e.w2);
      break;
    case Regime::kT1Convex:
      AddConvergenceCommon(c, e);
      c.Greater("u > (1 + w2)/2", e.u, (1.0 + e.w2) / 2.0);
      c.Greater("v > 1 - u + w2", e.v, 1.0 - e.u + e.w2);
      c.Greater("sigma_zeta exp > 1 - u + max{w1, w2/2}", e.zeta_min,
                1.0 - e.u + std::max(e.w1, e.w2 / 2.0));
      c.Greater("sigma_xi exp > 1 - u + v/2 - w2", e.xi_min, 1.0 - e.u + e.v / 2.0 - e.w2);
      break;
    case Regime::kT1Nonconvex:
      AddConvergenceCommon(c, e);
      c.Greater("u > max{1/2, (1 + 2 w2)/3}", e.u, std::max(0.5, (1.0 + 2.0 * e.w2) / 3.0));
      c.Greater("v > (1 - u)/2 + w2", e.v, (1.0 - e.u) / 2.0 + e.w2);
      c.Greater("sigma_zeta exp > (1 - u)/2 + max{w1, w2/2}", e.zeta_min,
                (1.0 - e.u) / 2.0 + std::max(e.w1, e.w2 / 2.0));
      c.Greater("sigma_xi exp > (1 - u)/2 + v/2 - w2", e.xi_min,
                (1.0 - e.u) / 2.0 + e.v / 2.0 - e.w2);
      break;
    case Regime::kT2Truthful:
      AddTruthfulConditions(c, e, s, w_hat);
      break;
    case Regime::kT3StronglyConvex:
      AddTruthfulConditions(c, e, s, w_hat);
      c.Greater("v > 1", e.v, 1.0);
      c.Greater("sigma_zeta exp > max{0, (1 - u)/2 + w1}", e.zeta_min,
                std::max(0.0, (1.0 - e.u) / 2.0 + e.w1));
      AddAttenuatedXiCondition(c, e);
      break;
    case Regime::kT3Convex:
      AddTruthfulConditions(c, e, s, w_hat);
      c.Greater("v > 1", e.v, 1.0);
      c.Greater("sigma_zeta exp > max{0, 1 - u + w1}", e.zeta_min,
                std::max(0.0, 1.0 - e.u + e.w1));
      AddAttenuatedXiCondition(c, e);
      break;
    case Regime::kT3Nonconvex:
      AddTruthfulConditions(c, e, s, w_hat);
      c.Greater("v > max{1, u - w1}", e.v, std::max(1.0, e.u - e.w1));
      c.Greater("sigma_zeta exp > max{0, (1 - u)/2 + w1}", e.zeta_min,
                std::max(0.0, (1.0 - e.u) / 2.0 + e.w1));
      AddAttenuatedXiCondition(c, e);
      break;
  }
  return {regime, c.Take()};
}

double C1(const ScheduleSet& s, double w_hat) {
  const double num = w_hat * s.gamma2.base;
  const double den = num - (s.lambda.exponent - s.gamma1.exponent - s.gamma2.exponent);
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kDenominatorNonpositive,
                fmt::format("w_hat gamma2 - (u - w1 - w2) = {:.6g} must be > 0", den));
  }
  return num / den;
}

double C2(double w1, double w_hat) {
  if (!(w_hat > 0.0 && w_hat < 2.0)) {
    throw Error(ErrorCode::kInvalidW, fmt::format("w_hat = {} outside (0, 2)", w_hat));
  }
  const double base = 4.0 * w1 / (std::numbers::e * std::log(2.0 / (2.0 - w_hat)));
  return std::pow(base, w1) * 2.0 / w_hat;
}

double C0(const ScheduleSet& s, const ProblemConstants& k) {
  const double w1 = s.gamma1.exponent;
  if (!(w1 > 1.0)) {
    throw Error(ErrorCode::kRegimeViolation, "c0 needs w1 > 1 (summable gamma1)");
  }
  const double g1 = s.gamma1.base;
  return g1 * k.lf1 + 2.0 * k.lg * (1.0 + g1 * w1 / (w1 - 1.0)) * k.lf2;
}

double SensitivityPsi(Iteration t, const ScheduleSet& s, double w_hat) {
  return C1(s, w_hat) * s.lambda.value(t) / (s.gamma1.value(t) * s.gamma2.value(t));
}

double SensitivityY(Iteration t, const ScheduleSet& s, double w_hat) {
  return C2(s.gamma1.exponent, w_hat) * s.gamma1.value(t);
}

double SensitivityPsiRecursionRatio(const ScheduleSet& s, double w_hat, int d,
                                    const ProblemConstants& k) {
  const double root_d = std::sqrt(static_cast<double>(d));
  return (2.0 * C0(s, k) * root_d * k.lg + 2.0 * root_d * k.max_g) / w_hat;
}

std::vector<double> SensitivityPsiRecursion(Iteration T, const ScheduleSet& s,
                                            double w_hat, int d,
                                            const ProblemConstants& k) {
  const double forcing = SensitivityPsiRecursionRatio(s, w_hat, d, k) * w_hat;
  std::vector<double> delta(static_cast<std::size_t>(T) + 1, 0.0);
  for (Iteration t = 0; t < T; ++t) {
    delta[t + 1] = (1.0 - s.gamma2.value(t) * w_hat) * delta[t] +
                   forcing * s.lambda.value(t) / s.gamma1.value(t);
  }
  return delta;
}

EpsilonTerm EpsilonTermAt(Iteration t, const ScheduleSet& s, double w_hat, int agents) {
  const Series ser = SeriesOf(s, w_hat, agents);
  const double base = static_cast<double>(t) + 1.0;
  return {ser.a * std::pow(base, -ser.p), ser.b * std::pow(base, -ser.q)};
}

PrivacyReport Epsilon(Iteration T, const ScheduleSet& s, double w_hat, int agents) {
  if (T < 0 && T != kInfiniteHorizon) {
    throw Error(ErrorCode::kInvalidArgument, "T must be >= 0 or the infinite sentinel");
  }
  RequireTruthful(s, agents);
  const Series ser = SeriesOf(s, w_hat, agents);
  PrivacyReport r;
  r.T = T;
  r.c1 = ser.c1;
  r.c2 = ser.c2;
  r.w_hat = w_hat;
  r.exponent_psi = ser.p;
  r.exponent_y = ser.q;
  r.min_sigma_xi = ser.xi.min_base;
  r.limiting_agent_xi = ser.xi.limiting_agent;
  r.min_sigma_zeta = ser.zeta.min_base;
  r.limiting_agent_zeta = ser.zeta.limiting_agent;

  if (T == kInfiniteHorizon) {
    // sum_{t>=1} (t+1)^-p = zeta(p) - 1.
    r.epsilon_psi = ser.a * (boost::math::zeta(ser.p) - 1.0);
    r.epsilon_y = ser.b * (boost::math::zeta(ser.q) - 1.0);
    r.epsilon = r.epsilon_psi + r.epsilon_y;
    r.partial_terms = kPartialTerms;
    r.partial_sum = ser.a * PowerSum(ser.p, kPartialTerms) + ser.b * PowerSum(ser.q, kPartialTerms);
    // sum_{t>N} (t+1)^-p <= int_N^inf (x+1)^-p dx = (N+1)^{1-p} / (p-1).
    const double n1 = static_cast<double>(kPartialTerms) + 1.0;
    r.tail_bound = ser.a * std::pow(n1, 1.0 - ser.p) / (ser.p - 1.0) +
                   ser.b * std::pow(n1, 1.0 - ser.q) / (ser.q - 1.0);
    return r;
  }
  r.epsilon_psi = ser.a * PowerSum(ser.p, T);
  r.epsilon_y = ser.b * PowerSum(ser.q, T);
  r.epsilon = r.epsilon_psi + r.epsilon_y;
  return r;
}

EtaReport Eta(double epsilon, const ProblemConstants& k) {
  EtaReport r;
  r.intrinsic = (k.lf1 + k.lf2 * k.lg) * k.diam_x;
  r.privacy = 2.0 * epsilon * k.max_f;
  r.eta = r.intrinsic + r.privacy;
  r.linearization_exceeded = epsilon >= 1.0;
  return r;
}

NoiseCalibration CalibrateNoise(double target_epsilon, Iteration T,
                                const ScheduleSet& s, double w_hat, int agents) {
  if (!(target_epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target epsilon must be positive");
  }
  RequireTruthful(s, agents);
  ScheduleSet unit = s;
  unit.noise.xi = {1.0, s.noise.xi_extremes(agents).max_exponent};
  unit.noise.zeta = {1.0, s.noise.zeta_extremes(agents).max_exponent};
  unit.noise.xi_per_agent.clear();
  unit.noise.zeta_per_agent.clear();
  // With unit bases each part of the budget is the series itself; scaling a
  // base by k divides its part by k.
  const PrivacyReport at_unit = Epsilon(T, unit, w_hat, 1);
  NoiseCalibration out;
  out.sigma_xi = 2.0 * at_unit.epsilon_psi / target_epsilon;
  out.sigma_zeta = 2.0 * at_unit.epsilon_y / target_epsilon;
  // Rounding can land one ulp above the target; widen until it does not.
  for (int guard = 0; guard < 64; ++guard) {
    unit.noise.xi.base = out.sigma_xi;
    unit.noise.zeta.base = out.sigma_zeta;
    if (Epsilon(T, unit, w_hat, 1).epsilon <= target_epsilon) break;
    out.sigma_xi *= 1.0 + 2.0 * std::numeric_limits<double>::epsilon();
    out.sigma_zeta *= 1.0 + 2.0 * std::numeric_limits<double>::epsilon();
  }
  return out;
}

// ---------------------------------------------------------------------------

bool Lemma2HypothesesI(const Lemma2Params& p) {
  return p.a0 > p.b - p.a && p.b0 > 0.0 && p.a > 0.0 && p.a < 1.0 && p.b > p.a &&
         p.a0 <= 1.0 && p.phi0 >= 0.0;
}

bool Lemma2HypothesesII(const Lemma2Params& p) {
  return p.a0 > 0.0 && p.b0 > 0.0 && p.a > 1.0 && p.b > 1.0 && p.a0 <= 1.0 &&
         p.phi0 >= 0.0;
}

double Lemma2BoundI(const Lemma2Params& p, Iteration t) {
  const double c_phi = (p.a0 / p.b0) * std::max(p.phi0, p.b0 / (p.a0 - (p.b - p.a)));
  const double base = static_cast<double>(t) + 1.0;
  // b_t / a_t = (b0 / a0) (t+1)^{a-b}
  return c_phi * (p.b0 / p.a0) * std::pow(base, p.a - p.b);
}

double Lemma2BoundII(const Lemma2Params& p, Iteration t) {
  const double base = static_cast<double>(t) + 1.0;
  return p.phi0 * std::exp(-(1.0 - std::pow(base, -(p.a - 1.0))) / (p.a - 1.0)) + p.b0;
}

double Lemma2BoundIICorrected(const Lemma2Params& p, Iteration t) {
  const double base = static_cast<double>(t) + 1.0;
  return p.phi0 * std::exp(-p.a0 * (1.0 - std::pow(base, 1.0 - p.a)) / (p.a - 1.0)) +
         p.b0 * p.b / (p.b - 1.0);
}

std::optional<Lemma2Violation> CheckLemma2Draw(const Lemma2Params& p,
                                               Iteration horizon, bool part_i,
                                               bool corrected) {
  double phi = p.phi0;
  for (Iteration t = 0;; ++t) {
    const double bound = part_i      ? Lemma2BoundI(p, t)
                         : corrected ? Lemma2BoundIICorrected(p, t)
                                     : Lemma2BoundII(p, t);
    if (phi > bound * (1.0 + 1e-12)) return Lemma2Violation{p, t, phi, bound};
    if (t >= horizon) break;
    const double base = static_cast<double>(t) + 1.0;
    phi = (1.0 - p.a0 * std::pow(base, -p.a)) * phi + p.b0 * std::pow(base, -p.b);
  }
  return std::nullopt;
}

Lemma2Summary CheckLemma2Bounds(int draws, Iteration horizon, std::uint64_t seed) {
  if (draws < 1) throw Error(ErrorCode::kInvalidArgument, "draws must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return lo * std::pow(hi / lo, unit(rng));
  };
  auto initial = [&] { return unit(rng) < 0.1 ? 0.0 : 10.0 * unit(rng); };

  Lemma2Summary s;
  s.draws = draws;
  for (int accepted = 0; accepted < draws;) {
    Lemma2Params p;
    p.a = 0.02 + 0.96 * unit(rng);
    p.b = p.a + 0.01 + 0.98 * unit(rng);
    p.a0 = unit(rng);
    p.b0 = log_uniform(1e-6, 10.0);
    p.phi0 = initial();
    if (!Lemma2HypothesesI(p)) {
      ++s.rejected;
      continue;
    }
    ++accepted;
    if (auto v = CheckLemma2Draw(p, horizon, true)) {
      ++s.violations_i;
      if (s.examples_i.size() < 5) s.examples_i.push_back(*v);
    }
  }
  for (int accepted = 0; accepted < draws;) {
    Lemma2Params p;
    p.a = 1.01 + 2.0 * unit(rng);
    p.b = 1.01 + 2.0 * unit(rng);
    p.a0 = unit(rng);
    p.b0 = log_uniform(1e-6, 10.0);
    p.phi0 = initial();
    if (!Lemma2HypothesesII(p)) {
      ++s.rejected;
      continue;
    }
    ++accepted;
    if (auto v = CheckLemma2Draw(p, horizon, false)) {
      ++s.violations_ii;
      if (s.examples_ii.size() < 5) s.examples_ii.push_back(*v);
    }
    if (CheckLemma2Draw(p, horizon, false, true)) ++s.violations_ii_corrected;
  }
  return s;
}

}  // namespace tdao
