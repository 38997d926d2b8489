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
#ifndef SCALESHIFT_METRICS_HPP_
#define SCALESHIFT_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "json.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"

namespace scaleshift {

// A statistic that may be undefined (zero denominator, zero variance).
// std::nullopt is the "not defined" marker; it is never encoded as NaN.
using Stat = std::optional<double>;

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }

  void add(bool label, bool predicted) {
    if (label)
      (predicted ? tp : fn) += 1;
    else
      (predicted ? fp : tn) += 1;
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Rates {
  Stat tpr, tnr, fpr, fnr, f1;
};

inline Rates rates_and_f1(const ConfusionCounts& c) {
  Rates r;
  if (c.tp + c.fn > 0) {
    r.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.fnr = 1.0 - *r.tpr;
  }
  if (c.tn + c.fp > 0) {
    r.tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    r.fpr = 1.0 - *r.tnr;
  }
  if (2 * c.tp + c.fp + c.fn > 0)
    r.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return r;
}

struct ProbabilityShift {
  double p_source = 0.0;
  double p_target = 0.0;
  double delta = 0.0;

  static ProbabilityShift of(double p_source, double p_target) {
    if (!(p_source >= 0.0 && p_source <= 1.0 && p_target >= 0.0 && p_target <= 1.0))
      throw ArgumentError("probability shift: probabilities must lie in [0, 1]");
    return {p_source, p_target, std::abs(p_target - p_source)};
  }
};

// ---------------------------------------------------------------------------
// Distances and similarity

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("euclidean_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double euclidean_distance(const Array2D& a, const Array2D& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("euclidean_distance: shape mismatch");
  return euclidean_distance(a.values(), b.values());
}

inline double euclidean_distance(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels())
    throw ArgumentError("euclidean_distance: shape mismatch");
  return euclidean_distance(a.values(), b.values());
}

struct SsimParams {
  std::size_t window = 8;       // uniform window side; clamped to the array size
  double dynamic_range = 1.0;   // L
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean SSIM over all window positions (stride 1, windows fully inside the
// array), with sample (n - 1) variances and covariance.
inline double ssim(const Array2D& a, const Array2D& b, const SsimParams& p = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("ssim: shape mismatch");
  if (a.empty()) throw ArgumentError("ssim: empty input");
  const std::size_t wh = std::min(p.window, a.rows()), ww = std::min(p.window, a.cols());
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const double n = static_cast<double>(wh * ww);
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + wh <= a.rows(); ++r0)
    for (std::size_t c0 = 0; c0 + ww <= a.cols(); ++c0) {
      double ma = 0.0, mb = 0.0;
      for (std::size_t r = r0; r < r0 + wh; ++r)
        for (std::size_t c = c0; c < c0 + ww; ++c) {
          ma += a(r, c);
          mb += b(r, c);
        }
      ma /= n;
      mb /= n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (std::size_t r = r0; r < r0 + wh; ++r)
        for (std::size_t c = c0; c < c0 + ww; ++c) {
          const double da = a(r, c) - ma, db = b(r, c) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va = va / n * unbias;
      vb = vb / n * unbias;
      cov = cov / n * unbias;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

// Mean of the per-channel SSIM.
inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels())
    throw ArgumentError("ssim: shape mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) s += ssim(a.channel(c), b.channel(c), p);
  return s / static_cast<double>(a.channels());
}

// ---------------------------------------------------------------------------
// Pearson correlation

// Two-sided p-value of Student's t with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ArgumentError("student t: dof must be positive");
  if (std::isinf(t)) return 0.0;
  return boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t));
}

struct Correlation {
  Stat r;
  Stat p_value;
  std::size_t n = 0;
};

// Sample correlation with a two-sided p-value from the t distribution with
// n - 2 degrees of freedom. Undefined when either variable has zero variance.
inline Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ArgumentError("pearson: lengths differ");
  if (xs.size() < 3) throw ArgumentError("pearson: need at least 3 points");
  Correlation out;
  out.n = xs.size();
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return out;
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  out.r = r;
  const double dof = n - 2.0;
  if (dof <= 0.0) return out;
  const double one_minus = 1.0 - r * r;
  // Relative rounding of exact linear data leaves 1 - r^2 at a few ulps.
  if (one_minus <= 4.0 * std::numeric_limits<double>::epsilon()) {
    out.p_value = 0.0;
    return out;
  }
  out.p_value = student_t_two_sided_p(r * std::sqrt(dof / one_minus), dof);
  return out;
}

struct ShiftPair {
  double p_source = 0.0;
  double p_target = 0.0;
  double ssim_low_scale = 0.0;
  double euclid_low_scale = 0.0;
};

struct ShiftAnalysis {
  std::vector<double> delta_p;
  Correlation ssim_vs_delta;
  Correlation euclid_vs_delta;
  std::size_t n = 0;
};

inline ShiftAnalysis probability_shift_analysis(std::span<const ShiftPair> pairs) {
  if (pairs.size() < 3) throw ArgumentError("probability shift analysis: need at least 3 pairs");
  ShiftAnalysis a;
  a.n = pairs.size();
  std::vector<double> ss, eu;
  for (const auto& p : pairs) {
    a.delta_p.push_back(ProbabilityShift::of(p.p_source, p.p_target).delta);
    ss.push_back(p.ssim_low_scale);
    eu.push_back(p.euclid_low_scale);
  }
  a.ssim_vs_delta = pearson(ss, a.delta_p);
  a.euclid_vs_delta = pearson(eu, a.delta_p);
  return a;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json stat_json(const Stat& s) {
  return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline nlohmann::json to_json(const Rates& r) {
  return {{"tpr", stat_json(r.tpr)}, {"tnr", stat_json(r.tnr)}, {"fpr", stat_json(r.fpr)},
          {"fnr", stat_json(r.fnr)}, {"f1", stat_json(r.f1)}};
}

inline nlohmann::json to_json(const Correlation& c) {
  return {{"r", stat_json(c.r)}, {"p_value", stat_json(c.p_value)}, {"n", c.n}};
}

inline std::string format_stat(const Stat& s, int digits = 4) {
  if (!s) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *s);
  return buf;
}

// One delimiter-separated row: name,tp,fp,tn,fn,tpr,tnr,fpr,fnr,f1.
inline std::string rates_csv_row(const std::string& name, const ConfusionCounts& c) {
  const Rates r = rates_and_f1(c);
  return name + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
         std::to_string(c.tn) + "," + std::to_string(c.fn) + "," + format_stat(r.tpr) + "," +
         format_stat(r.tnr) + "," + format_stat(r.fpr) + "," + format_stat(r.fnr) + "," +
         format_stat(r.f1);
}

inline constexpr const char* kRatesCsvHeader = "split,tp,fp,tn,fn,tpr,tnr,fpr,fnr,f1";

}  // namespace scaleshift

#endif  // SCALESHIFT_METRICS_HPP_
