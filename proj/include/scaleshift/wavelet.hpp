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
#ifndef SCALESHIFT_WAVELET_HPP_
#define SCALESHIFT_WAVELET_HPP_

// Multi-level 2D dyadic discrete wavelet transform (Mallat scheme) with
// periodic boundary extension. With orthonormal filters the transform is an
// orthogonal change of basis, so the inverse is its transpose and energy is
// preserved.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"

namespace scaleshift {

struct WaveletFilter {
  std::string name;
  std::vector<double> low_pass;
  std::vector<double> high_pass;
  bool orthonormal = true;

  // Builds the quadrature-mirror high-pass h[k] = (-1)^k g[L-1-k].
  static WaveletFilter orthonormal_from_low_pass(std::string name, std::vector<double> low) {
    if (low.empty() || low.size() % 2 != 0)
      throw ArgumentError("wavelet low-pass filter must have even, nonzero length");
    WaveletFilter f;
    f.name = std::move(name);
    f.high_pass.resize(low.size());
    const std::size_t n = low.size();
    for (std::size_t k = 0; k < n; ++k)
      f.high_pass[k] = (k % 2 == 0 ? 1.0 : -1.0) * low[n - 1 - k];
    f.low_pass = std::move(low);
    f.orthonormal = true;
    return f;
  }

  std::size_t length() const noexcept { return low_pass.size(); }
};

inline WaveletFilter haar() {
  const double s = 1.0 / std::sqrt(2.0);
  return WaveletFilter::orthonormal_from_low_pass("haar", {s, s});
}

// Daubechies wavelet with two vanishing moments (4 taps).
inline WaveletFilter daubechies2() {
  const double r3 = std::sqrt(3.0);
  const double d = 4.0 * std::sqrt(2.0);
  return WaveletFilter::orthonormal_from_low_pass(
      "db2", {(1.0 + r3) / d, (3.0 + r3) / d, (3.0 - r3) / d, (1.0 - r3) / d});
}

inline WaveletFilter filter_by_name(std::string_view name) {
  if (name == "haar" || name == "db1") return haar();
  if (name == "db2") return daubechies2();
  throw ArgumentError("unknown wavelet filter '" + std::string(name) + "'");
}

enum class Band { approximation = 0, horizontal = 1, vertical = 2, diagonal = 3 };

inline std::string_view band_name(Band b) {
  switch (b) {
    case Band::approximation: return "approximation";
    case Band::horizontal: return "horizontal";
    case Band::vertical: return "vertical";
    case Band::diagonal: return "diagonal";
  }
  return "?";
}

// Names one subband. For the approximation band `level` is the pyramid depth.
struct SubbandId {
  int level = 1;
  Band band = Band::horizontal;

  friend bool operator==(const SubbandId&, const SubbandId&) = default;
};

// Canonical subband order: approximation first, then details from the
// coarsest level down to level 1, each as (horizontal, vertical, diagonal).
// There are 3 * levels + 1 entries.
inline std::vector<SubbandId> subband_order(int levels) {
  std::vector<SubbandId> ids;
  ids.push_back({levels, Band::approximation});
  for (int j = levels; j >= 1; --j)
    for (Band b : {Band::horizontal, Band::vertical, Band::diagonal}) ids.push_back({j, b});
  return ids;
}

inline std::size_t subband_index(SubbandId id, int levels) {
  if (id.band == Band::approximation) return 0;
  return 1 + static_cast<std::size_t>(levels - id.level) * 3 +
         (static_cast<std::size_t>(id.band) - 1);
}

class WaveletPyramid {
 public:
  WaveletPyramid() = default;
  WaveletPyramid(std::size_t height, std::size_t width, int levels, std::string filter_name)
      : height_(height), width_(width), levels_(levels), filter_name_(std::move(filter_name)) {
    approximation_ = Array2D(height >> levels, width >> levels);
    details_.resize(static_cast<std::size_t>(levels));
    for (int j = 1; j <= levels; ++j)
      for (auto& d : details_[j - 1]) d = Array2D(height >> j, width >> j);
  }

  int levels() const noexcept { return levels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  const std::string& filter_name() const noexcept { return filter_name_; }

  Array2D& approximation() { return approximation_; }
  const Array2D& approximation() const { return approximation_; }

  Array2D& detail(int level, Band band) { return details_.at(check(level, band))[slot(band)]; }
  const Array2D& detail(int level, Band band) const {
    return details_.at(check(level, band))[slot(band)];
  }

  Array2D& subband(SubbandId id) {
    if (id.band == Band::approximation) {
      check_approx(id.level);
      return approximation_;
    }
    return detail(id.level, id.band);
  }
  const Array2D& subband(SubbandId id) const {
    if (id.band == Band::approximation) {
      check_approx(id.level);
      return approximation_;
    }
    return detail(id.level, id.band);
  }

  // Sum of squared coefficients over all subbands.
  double energy() const {
    double e = approximation_.energy();
    for (const auto& lvl : details_)
      for (const auto& d : lvl) e += d.energy();
    return e;
  }

  std::size_t coefficient_count() const { return height_ * width_; }

  friend bool operator==(const WaveletPyramid&, const WaveletPyramid&) = default;

 private:
  static std::size_t slot(Band b) { return static_cast<std::size_t>(b) - 1; }

  std::size_t check(int level, Band band) const {
    if (band == Band::approximation)
      throw ArgumentError("detail(): approximation is not a detail band");
    if (level < 1 || level > levels_)
      throw ArgumentError("subband level " + std::to_string(level) + " out of range [1, " +
                          std::to_string(levels_) + "]");
    return static_cast<std::size_t>(level - 1);
  }

  // The approximation band only exists at the coarsest level.
  void check_approx(int level) const {
    if (level != levels_)
      throw ArgumentError("approximation band lives at level " + std::to_string(levels_) +
                          ", not " + std::to_string(level));
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  int levels_ = 0;
  std::string filter_name_;
  Array2D approximation_;
  std::vector<std::array<Array2D, 3>> details_;
};

namespace detail {

// One analysis step along a strided line of length n (even), periodic.
inline void analyze_line(const double* in, std::size_t stride, std::size_t n,
                         const WaveletFilter& f, double* low, double* high,
                         std::size_t out_stride) {
  const std::size_t half = n / 2;
  const std::size_t taps = f.length();
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      const double v = in[((2 * k + t) % n) * stride];
      a += f.low_pass[t] * v;
      d += f.high_pass[t] * v;
    }
    low[k * out_stride] = a;
    high[k * out_stride] = d;
  }
}

// Transpose of analyze_line: accumulates into `out` (must be zeroed).
inline void synthesize_line(const double* low, const double* high, std::size_t in_stride,
                            std::size_t n, const WaveletFilter& f, double* out,
                            std::size_t stride) {
  const std::size_t half = n / 2;
  const std::size_t taps = f.length();
  for (std::size_t k = 0; k < half; ++k) {
    const double a = low[k * in_stride];
    const double d = high[k * in_stride];
    for (std::size_t t = 0; t < taps; ++t)
      out[((2 * k + t) % n) * stride] += f.low_pass[t] * a + f.high_pass[t] * d;
  }
}

// Single-level 2D analysis of `x` into LL, LH (horizontal), HL (vertical), HH.
inline void analyze_2d(const Array2D& x, const WaveletFilter& f, Array2D& ll, Array2D& lh,
                       Array2D& hl, Array2D& hh) {
  const std::size_t rows = x.rows(), cols = x.cols();
  const std::size_t hr = rows / 2, hc = cols / 2;
  Array2D lo_x(rows, hc), hi_x(rows, hc);
  for (std::size_t r = 0; r < rows; ++r)
    analyze_line(&x.values()[r * cols], 1, cols, f, &lo_x(r, 0), &hi_x(r, 0), 1);
  ll = Array2D(hr, hc);
  lh = Array2D(hr, hc);
  hl = Array2D(hr, hc);
  hh = Array2D(hr, hc);
  for (std::size_t c = 0; c < hc; ++c) {
    analyze_line(&lo_x.values()[c], hc, rows, f, &ll.values()[c], &lh.values()[c], hc);
    analyze_line(&hi_x.values()[c], hc, rows, f, &hl.values()[c], &hh.values()[c], hc);
  }
}

inline Array2D synthesize_2d(const Array2D& ll, const Array2D& lh, const Array2D& hl,
                             const Array2D& hh, const WaveletFilter& f) {
  const std::size_t hr = ll.rows(), hc = ll.cols();
  const std::size_t rows = 2 * hr, cols = 2 * hc;
  Array2D lo_x(rows, hc), hi_x(rows, hc);
  for (std::size_t c = 0; c < hc; ++c) {
    synthesize_line(&ll.values()[c], &lh.values()[c], hc, rows, f, &lo_x.values()[c], hc);
    synthesize_line(&hl.values()[c], &hh.values()[c], hc, rows, f, &hi_x.values()[c], hc);
  }
  Array2D out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    synthesize_line(&lo_x(r, 0), &hi_x(r, 0), 1, cols, f, &out.values()[r * cols], 1);
  return out;
}

inline void check_filter(const WaveletFilter& f) {
  if (f.low_pass.empty() || f.low_pass.size() != f.high_pass.size() || f.low_pass.size() % 2)
    throw ArgumentError("wavelet filter '" + f.name +
                        "' must have equal, even-length low and high pass filters");
}

}  // namespace detail

// Forward transform of one channel. Both sides must be divisible by 2^levels.
inline WaveletPyramid dwt_forward(const Array2D& channel, const WaveletFilter& filter,
                                  int levels) {
  if (levels < 1) throw ArgumentError("dwt_forward: levels must be >= 1");
  detail::check_filter(filter);
  const std::size_t block = std::size_t{1} << levels;
  if (channel.rows() == 0 || channel.rows() % block != 0)
    throw DimensionError("dwt_forward: height " + std::to_string(channel.rows()) +
                         " is not divisible by 2^" + std::to_string(levels));
  if (channel.cols() == 0 || channel.cols() % block != 0)
    throw DimensionError("dwt_forward: width " + std::to_string(channel.cols()) +
                         " is not divisible by 2^" + std::to_string(levels));

  WaveletPyramid pyr(channel.rows(), channel.cols(), levels, filter.name);
  Array2D current = channel;
  for (int j = 1; j <= levels; ++j) {
    Array2D ll;
    detail::analyze_2d(current, filter, ll, pyr.detail(j, Band::horizontal),
                       pyr.detail(j, Band::vertical), pyr.detail(j, Band::diagonal));
    current = std::move(ll);
  }
  pyr.approximation() = std::move(current);
  return pyr;
}

inline Array2D dwt_inverse(const WaveletPyramid& pyr, const WaveletFilter& filter) {
  detail::check_filter(filter);
  if (pyr.filter_name() != filter.name)
    throw ArgumentError("dwt_inverse: pyramid built with '" + pyr.filter_name() +
                        "' cannot be inverted with '" + filter.name + "'");
  if (pyr.levels() < 1) throw ArgumentError("dwt_inverse: empty pyramid");
  Array2D current = pyr.approximation();
  for (int j = pyr.levels(); j >= 1; --j) {
    const auto& h = pyr.detail(j, Band::horizontal);
    if (current.rows() != h.rows() || current.cols() != h.cols())
      throw ArgumentError("dwt_inverse: inconsistent subband shapes at level " +
                          std::to_string(j));
    current = detail::synthesize_2d(current, h, pyr.detail(j, Band::vertical),
                                    pyr.detail(j, Band::diagonal), filter);
  }
  return current;
}

// Mutable reference to a subband; writes are visible in the pyramid.
inline Array2D& subband_view(WaveletPyramid& pyr, int level, Band band) {
  return pyr.subband({level, band});
}

inline const Array2D& subband_view(const WaveletPyramid& pyr, int level, Band band) {
  return pyr.subband({level, band});
}

// Channel-wise transform; one pyramid per channel.
inline std::vector<WaveletPyramid> dwt_image(const Image& image, const WaveletFilter& filter,
                                             int levels) {
  std::vector<WaveletPyramid> out;
  out.reserve(image.channels());
  for (std::size_t c = 0; c < image.channels(); ++c)
    out.push_back(dwt_forward(image.channel(c), filter, levels));
  return out;
}

inline Image idwt_image(const std::vector<WaveletPyramid>& pyramids,
                        const WaveletFilter& filter) {
  std::vector<Array2D> planes;
  planes.reserve(pyramids.size());
  for (const auto& p : pyramids) planes.push_back(dwt_inverse(p, filter));
  return Image::from_channels(planes);
}

}  // namespace scaleshift

#endif  // SCALESHIFT_WAVELET_HPP_
