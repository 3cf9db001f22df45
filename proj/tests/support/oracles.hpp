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

// Independent high-precision references shared by the unit and acceptance
// tests. Nothing here calls into the privacy accounting of the library.

#ifndef TDAO_TESTS_SUPPORT_ORACLES_HPP_
#define TDAO_TESTS_SUPPORT_ORACLES_HPP_

#include <cstdint>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "tdao/schedules.hpp"

namespace tdao::testing {

using Big = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<256, boost::multiprecision::digit_base_2>>;

inline Big BigC1(const ScheduleSet& s, double w_hat) {
  const Big num = Big(w_hat) * Big(s.gamma2.base);
  return num / (num - (Big(s.lambda.exponent) - Big(s.gamma1.exponent) - Big(s.gamma2.exponent)));
}

inline Big BigC2(double w1, double w_hat) {
  using boost::multiprecision::log;
  using boost::multiprecision::pow;
  const Big e = boost::math::constants::e<Big>();
  const Big base = 4 * Big(w1) / (e * log(Big(2) / (Big(2) - Big(w_hat))));
  return pow(base, Big(w1)) * 2 / Big(w_hat);
}

// Privacy budget of a homogeneous schedule, summed term by term:
//   sum_{t=1}^{T} Delta_psi(t) / nu_xi(t) + Delta_y(t) / nu_zeta(t)
// with nu = sigma / sqrt(2), Delta_psi = c1 lambda / (gamma1 gamma2) and
// Delta_y = c2 gamma1.
inline Big BigEpsilon(const ScheduleSet& s, double w_hat, std::int64_t T) {
  using boost::multiprecision::pow;
  using boost::multiprecision::sqrt;
  const Big c1 = BigC1(s, w_hat);
  const Big c2 = BigC2(s.gamma1.exponent, w_hat);
  const Big root2 = sqrt(Big(2));
  auto profile = [](const DecayProfile& d, const Big& base) {
    return Big(d.base) * pow(base, -Big(d.exponent));
  };
  Big sum = 0;
  for (std::int64_t t = 1; t <= T; ++t) {
    const Big b = Big(t) + 1;
    const Big lam = profile(s.lambda, b), g1 = profile(s.gamma1, b), g2 = profile(s.gamma2, b);
    const Big nu_xi = profile(s.noise.xi, b) / root2;
    const Big nu_zeta = profile(s.noise.zeta, b) / root2;
    sum += c1 * lam / (g1 * g2) / nu_xi + c2 * g1 / nu_zeta;
  }
  return sum;
}

}  // namespace tdao::testing

#endif  // TDAO_TESTS_SUPPORT_ORACLES_HPP_
