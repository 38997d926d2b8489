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
#ifndef SCALESHIFT_RENDER_HPP_
#define SCALESHIFT_RENDER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>

#include "scaleshift/attribution.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/png_io.hpp"

namespace scaleshift {

using Rgb = std::array<double, 3>;

// Piecewise-linear approximation of the "inferno" colormap, t in [0, 1].
inline Rgb colormap(double t) {
  static constexpr std::array<Rgb, 6> stops{{{0.001, 0.000, 0.014},
                                             {0.258, 0.039, 0.406},
                                             {0.578, 0.148, 0.404},
                                             {0.865, 0.317, 0.226},
                                             {0.988, 0.645, 0.040},
                                             {0.988, 0.998, 0.645}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out{};
  for (int c = 0; c < 3; ++c) out[c] = stops[i][c] * (1.0 - f) + stops[i + 1][c] * f;
  return out;
}

// Linear normalization to [0, max]. Negative values map to 0. Returns false
// (and a uniform image) when the map has no positive value.
inline bool colorize(const Array2D& values, Image& out) {
  out = Image(values.rows(), values.cols(), 3);
  double mx = 0.0;
  for (double v : values.values()) mx = std::max(mx, v);
  const bool informative = mx > 0.0;
  for (std::size_t y = 0; y < values.rows(); ++y)
    for (std::size_t x = 0; x < values.cols(); ++x) {
      const Rgb c = colormap(informative ? std::max(0.0, values(y, x)) / mx : 0.0);
      for (int k = 0; k < 3; ++k) out(y, x, k) = c[k];
    }
  return informative;
}

// Wavelet-domain heatmap in the dyadic layout, with one-pixel white lines
// along the subband boundaries.
inline Image render_wavelet_heatmap(const WCAMResult& result, bool* informative = nullptr) {
  Image out;
  const bool ok = colorize(result.wavelet_heatmap, out);
  if (informative) *informative = ok;
  const auto& grid = result.grid;
  for (int j = 1; j <= grid.levels(); ++j) {
    const std::size_t h = grid.subband_rows(j), w = grid.subband_cols(j);
    // Vertical separator at column w spanning rows [0, 2h), horizontal at row
    // h spanning columns [0, 2w).
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (int k = 0; k < 3; ++k) out(y, w, k) = 1.0;
    for (std::size_t x = 0; x < 2 * w; ++x)
      for (int k = 0; k < 3; ++k) out(h, x, k) = 1.0;
  }
  return out;
}

// Spatial projection colorized and alpha-blended over the input image.
inline Image render_overlay(const WCAMResult& result, const Image& input, double alpha) {
  if (input.height() != result.grid.height() || input.width() != result.grid.width())
    throw ArgumentError("render_overlay: input shape does not match result");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("render_overlay: alpha outside [0, 1]");
  Image heat;
  colorize(result.spatial_projection, heat);
  Image out(input.height(), input.width(), 3);
  for (std::size_t y = 0; y < input.height(); ++y)
    for (std::size_t x = 0; x < input.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double base = input(y, x, input.channels() == 3 ? c : 0);
        out(y, x, c) = (1.0 - alpha) * base + alpha * heat(y, x, c);
      }
  return out;
}

struct HeatmapFiles {
  std::filesystem::path wavelet;
  std::filesystem::path overlay;
  bool degenerate = false;
};

// Writes <stem>_wavelet.png and <stem>_overlay.png into `dir`.
inline HeatmapFiles render_heatmaps(const WCAMResult& result, const Image& input,
                                    const std::filesystem::path& dir, const std::string& stem,
                                    double alpha = 0.5) {
  HeatmapFiles files{dir / (stem + "_wavelet.png"), dir / (stem + "_overlay.png"), false};
  bool informative = true;
  write_png(files.wavelet, render_wavelet_heatmap(result, &informative));
  write_png(files.overlay, render_overlay(result, input, alpha));
  files.degenerate = result.estimate.degenerate || !informative;
  return files;
}

}  // namespace scaleshift

#endif  // SCALESHIFT_RENDER_HPP_
