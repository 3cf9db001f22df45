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

// Privacy and truthfulness accounting: parameter-regime checks, the
// sensitivity bounds of the two shared trackers, the cumulative joint-DP
// budget epsilon, the truthfulness bound eta, the inverse noise calibration,
// and a numeric checker for the two sequence bounds the analysis relies on.

#ifndef TDAO_PRIVACY_HPP_
#define TDAO_PRIVACY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdao/problems.hpp"
#include "tdao/schedules.hpp"
#include "tdao/types.hpp"

namespace tdao {

enum class Regime {
  kT1StronglyConvex,
  kT1Convex,
  kT1Nonconvex,
  kT2Truthful,
  kT3StronglyConvex,
  kT3Convex,
  kT3Nonconvex,
};

std::string_view RegimeName(Regime regime);
Regime ParseRegime(std::string_view name);
std::vector<Regime> AllRegimes();

struct InequalityCheck {
  std::string name;  // e.g. "u > w2"
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

struct RegimeConditions {
  Regime regime = Regime::kT1StronglyConvex;
  std::vector<InequalityCheck> checks;

  bool passes() const;
  std::vector<std::string> failures() const;
};

// Every inequality of the regime, each strict. Noise exponents use the
// minimum over agents where the conditions bound them from below and the
// maximum where the truthfulness conditions bound them from above. When
// `w_hat` is given the truthful regimes also check w_hat gamma2 > u - w1 - w2,
// the positivity of the c1 denominator.
RegimeConditions CheckRegime(const ScheduleSet& s, Regime regime, int agents = 1,
                             std::optional<double> w_hat = std::nullopt);

// c1 = w_hat gamma2 / (w_hat gamma2 - (u - w1 - w2)); throws
// kDenominatorNonpositive when the denominator is <= 0.
double C1(const ScheduleSet& s, double w_hat);
// c2 = (4 w1 / (e ln(2 / (2 - w_hat))))^w1 * 2 / w_hat; throws kInvalidW
// unless 0 < w_hat < 2.
double C2(double w1, double w_hat);
// c0 = gamma1 L_f1 + 2 L_g (1 + gamma1 w1 / (w1 - 1)) L_f2; needs w1 > 1.
double C0(const ScheduleSet& s, const ProblemConstants& k);

// Closed-form sensitivity bounds at iteration t.
double SensitivityPsi(Iteration t, const ScheduleSet& s, double w_hat);
double SensitivityY(Iteration t, const ScheduleSet& s, double w_hat);

// Iterates Delta_{t+1} = (1 - gamma2_t w_hat) Delta_t
//                        + (2 c0 sqrt(d) L_g + 2 sqrt(d) D_g) lambda_t / gamma1_t
// from Delta_0 = 0 and returns Delta_0..Delta_T.
std::vector<double> SensitivityPsiRecursion(Iteration T, const ScheduleSet& s,
                                            double w_hat, int d,
                                            const ProblemConstants& k);
// Ratio between the recursion forcing constant and w_hat, i.e. the factor by
// which the recursion may exceed SensitivityPsi.
double SensitivityPsiRecursionRatio(const ScheduleSet& s, double w_hat, int d,
                                    const ProblemConstants& k);

inline constexpr Iteration kInfiniteHorizon = -1;

struct EpsilonTerm {
  double psi = 0.0;  // Delta_psi / nu_psi bound at iteration t
  double y = 0.0;    // Delta_y / nu_y bound at iteration t
};

struct PrivacyReport {
  Iteration T = 0;  // kInfiniteHorizon for the limit
  double epsilon = 0.0;
  double epsilon_psi = 0.0;
  double epsilon_y = 0.0;
  // Infinite horizon only: the first `partial_terms` terms and a certified
  // bound on the remainder, alongside the exact value above.
  double partial_sum = 0.0;
  double tail_bound = 0.0;
  Iteration partial_terms = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  double w_hat = 0.0;
  double exponent_psi = 0.0;  // u - w1 - w2 - max sigma_xi exponent
  double exponent_y = 0.0;    // w1 - max sigma_zeta exponent
  double min_sigma_xi = 0.0;
  int limiting_agent_xi = 0;
  double min_sigma_zeta = 0.0;
  int limiting_agent_zeta = 0;
};

// Term t >= 1 of the epsilon series.
EpsilonTerm EpsilonTermAt(Iteration t, const ScheduleSet& s, double w_hat,
                          int agents = 1);

// Sum of terms t = 1..T (compensated). Throws kRegimeViolation unless the
// truthful regime holds.
PrivacyReport Epsilon(Iteration T, const ScheduleSet& s, double w_hat,
                      int agents = 1);

struct EtaReport {
  double eta = 0.0;
  double intrinsic = 0.0;  // (L_f1 + L_f2 L_g) D_X
  double privacy = 0.0;    // 2 epsilon D_f
  bool linearization_exceeded = false;  // epsilon >= 1
};

EtaReport Eta(double epsilon, const ProblemConstants& k);

struct NoiseCalibration {
  double sigma_xi = 0.0;
  double sigma_zeta = 0.0;
};

// Noise bases splitting `target_epsilon` evenly between the two trackers;
// the recomputed budget never exceeds the target.
NoiseCalibration CalibrateNoise(double target_epsilon, Iteration T,
                                const ScheduleSet& s, double w_hat,
                                int agents = 1);

// ---------------------------------------------------------------------------
// Sequence bounds

struct Lemma2Params {
  double a0 = 0.0;
  double b0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double phi0 = 0.0;
};

// Hypotheses of the polynomial-decay bound: a0 > b - a, b0 > 0, 1 > a > 0,
// b > a; additionally a0 <= 1 so that 1 - a_t stays nonnegative.
bool Lemma2HypothesesI(const Lemma2Params& p);
// Hypotheses of the summable bound: a0 > 0, b0 > 0, a > 1, b > 1, a0 <= 1.
bool Lemma2HypothesesII(const Lemma2Params& p);

// c_Phi b_t / a_t with c_Phi = (a0 / b0) max{Phi0, b0 / (a0 - (b - a))}.
double Lemma2BoundI(const Lemma2Params& p, Iteration t);
// Phi0 exp(-(1 - (t+1)^{-(a-1)}) / (a-1)) + b0, as stated.
double Lemma2BoundII(const Lemma2Params& p, Iteration t);
// Phi0 exp(-a0 (1 - (t+1)^{1-a}) / (a-1)) + b0 b / (b-1): the bound that
// follows from prod(1 - a_s) <= exp(-sum a_s) and sum_s b_s <= b0 b/(b-1).
double Lemma2BoundIICorrected(const Lemma2Params& p, Iteration t);

struct Lemma2Violation {
  Lemma2Params params;
  Iteration t = 0;
  double value = 0.0;
  double bound = 0.0;
};

struct Lemma2Summary {
  int draws = 0;
  int rejected = 0;  // draws discarded by the hypothesis filter
  int violations_i = 0;
  int violations_ii = 0;
  int violations_ii_corrected = 0;
  std::vector<Lemma2Violation> examples_i;
  std::vector<Lemma2Violation> examples_ii;

  bool ok() const { return violations_i == 0 && violations_ii == 0; }
};

// Iterates Phi_{t+1} = (1 - a_t) Phi_t + b_t for t < horizon and compares
// against the bound at every t. Returns the first violation, if any.
std::optional<Lemma2Violation> CheckLemma2Draw(const Lemma2Params& p,
                                               Iteration horizon, bool part_i,
                                               bool corrected = false);

// `draws` hypothesis-satisfying draws per part, generated from `seed`.
Lemma2Summary CheckLemma2Bounds(int draws, Iteration horizon, std::uint64_t seed);

}  // namespace tdao

#endif  // TDAO_PRIVACY_HPP_
