/* Copyright 2026 The scaleshift Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef SCALESHIFT_TESTS_ORACLES_HPP_
#define SCALESHIFT_TESTS_ORACLES_HPP_

// Reference computations used only by tests. They deliberately avoid the
// library code paths they are compared against.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace scaleshift::testing {

using MaskFunction = std::function<double(std::span<const std::uint8_t>)>;

// Exact total Sobol indices of f over K independent Bernoulli(1/2) inputs by
// enumerating all 2^K masks: S_T[i] = E[(f(x|x_i=1) - f(x|x_i=0))^2] / 4 / Var f.
inline std::vector<double> exhaustive_total_indices(std::size_t k, const MaskFunction& f) {
  const std::size_t count = std::size_t{1} << k;
  std::vector<double> values(count);
  std::vector<std::uint8_t> m(k);
  for (std::size_t x = 0; x < count; ++x) {
    for (std::size_t i = 0; i < k; ++i) m[i] = static_cast<std::uint8_t>((x >> i) & 1u);
    values[x] = f(m);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(count);
  std::vector<double> st(k, 0.0);
  if (var <= 0.0) return st;
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t x = 0; x < count; ++x) {
      if ((x >> i) & 1u) continue;
      const double d = values[x | (std::size_t{1} << i)] - values[x];
      acc += d * d;
    }
    st[i] = acc / static_cast<double>(count / 2) / 4.0 / var;
  }
  return st;
}

struct AnalyticMaskFunction {
  const char* name;
  std::size_t cells;
  MaskFunction f;
};

// Five test functions over K <= 12 binary cells: single variable, additive,
// pure interaction, mixed, and a non-polynomial one.
inline std::vector<AnalyticMaskFunction> analytic_mask_functions() {
  return {
      {"m1", 4, [](auto m) { return static_cast<double>(m[0]); }},
      {"m1+m2", 4, [](auto m) { return static_cast<double>(m[0] + m[1]); }},
      {"m1*m2+0.5*m3", 6, [](auto m) { return double(m[0] * m[1]) + 0.5 * m[2]; }},
      {"mixed-8", 8,
       [](auto m) { return 2.0 * m[0] + m[1] * m[2] * m[3] + 0.5 * m[4] - m[5] * m[6]; }},
      {"quadratic-12", 12,
       [](auto m) {
         double s = 0.0;
         for (int i = 0; i < 12; ++i) s += (i + 1) * 0.1 * m[i];
         return s * s + m[0] * m[11];
       }},
  };
}

}  // namespace scaleshift::testing

#endif  // SCALESHIFT_TESTS_ORACLES_HPP_
