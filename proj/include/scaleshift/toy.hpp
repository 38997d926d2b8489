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
#ifndef SCALESHIFT_TOY_HPP_
#define SCALESHIFT_TOY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "scaleshift/augment.hpp"
#include "scaleshift/harness.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/png_io.hpp"
#include "scaleshift/rng.hpp"

namespace scaleshift::toy {

// Synthetic aerial tiles drawn at 10 cm/px on a 128 px canvas. Panels are
// dark rectangles crossed by a bright grid of 4 px pitch; distractors are
// plain roofs, and "south" distractors carry 4 px stripes (tiled roofs).

inline constexpr std::size_t kSide = 128;
inline constexpr double kSourceGsd = 10.0;
inline constexpr double kTargetGsd = 20.0;

struct Rect {
  std::size_t y0, x0, h, w;
};

inline Rect random_rect(Rng& rng, std::size_t side) {
  const std::size_t h = 32 + uniform_index(rng, 33);
  const std::size_t w = 32 + uniform_index(rng, 33);
  return {4 * uniform_index(rng, (side - h) / 4), 4 * uniform_index(rng, (side - w) / 4), h - h % 4,
          w - w % 4};
}

inline Image background(Rng& rng) {
  Image img(kSide, kSide, 3);
  const std::array<double, 3> base = {0.34 + 0.06 * uniform01(rng), 0.40 + 0.06 * uniform01(rng),
                                      0.28 + 0.06 * uniform01(rng)};
  const double fy = 2.0 * M_PI / (64.0 + 64.0 * uniform01(rng));
  const double fx = 2.0 * M_PI / (64.0 + 64.0 * uniform01(rng));
  const double phase = 2.0 * M_PI * uniform01(rng);
  for (std::size_t y = 0; y < kSide; ++y)
    for (std::size_t x = 0; x < kSide; ++x) {
      const double wave = 0.08 * std::sin(fy * y + phase) * std::cos(fx * x);
      for (std::size_t c = 0; c < 3; ++c) img(y, x, c) = base[c] + wave;
    }
  return img;
}

inline void draw_panel(Image& img, const Rect& r) {
  for (std::size_t y = r.y0; y < r.y0 + r.h; ++y)
    for (std::size_t x = r.x0; x < r.x0 + r.w; ++x) {
      const bool line = (y - r.y0) % 4 < 2 || (x - r.x0) % 4 < 2;
      const double v = line ? 0.70 : 0.12;
      img(y, x, 0) = v * 0.8;
      img(y, x, 1) = v * 0.9;
      img(y, x, 2) = std::min(1.0, v + 0.15);
    }
}

inline void draw_roof(Image& img, const Rect& r, double shade, bool striped) {
  for (std::size_t y = r.y0; y < r.y0 + r.h; ++y)
    for (std::size_t x = r.x0; x < r.x0 + r.w; ++x) {
      const double v = striped && (y - r.y0) % 4 < 2 ? shade + 0.35 : shade;
      img(y, x, 0) = v;
      img(y, x, 1) = v * 0.85;
      img(y, x, 2) = v * 0.8;
    }
}

inline Image scene(Rng& rng, bool positive, bool striped_roofs) {
  Image img = background(rng);
  draw_roof(img, random_rect(rng, kSide), 0.45 + 0.2 * uniform01(rng), striped_roofs);
  if (positive) draw_panel(img, random_rect(rng, kSide));
  clip_unit(img);
  return img;
}

// Second-provider rendition of a 20 cm/px tile: blur plus contrast jitter.
inline Image other_provider(const Image& img, double sigma, Rng& rng) {
  Image out = gaussian_blur(img, BlurConfig{sigma});
  const double gain = 0.8 + 0.3 * uniform01(rng);
  const double offset = -0.05 + 0.1 * uniform01(rng);
  const double m = out.mean();
  for (double& v : out.values()) v = (v - m) * gain + m + offset;
  clip_unit(out);
  return out;
}

inline nlohmann::json default_model() {
  return {{"kind", "detail_energy"}, {"level", 1}, {"levels", 3}, {"center", 0.45}, {"gain", 20.0}};
}

inline nlohmann::json default_config() {
  return {{"manifest", "manifest.csv"},
          {"model", {{"path", "model.json"}}},
          {"threshold", 0.5},
          {"source_provider", "google"},
          {"splits",
           {{"baseline", {{"provider", "google"}, {"region", "north"}, {"paired", true},
                          {"resample_to", kTargetGsd}}},
            {"gsd_shift", {{"provider", "google"}, {"region", "north"}, {"paired", false}}},
            {"geo_shift", {{"provider", "google"}, {"region", "south"}, {"resample_to", kTargetGsd}}},
            {"provider_shift", {{"provider", "ign"}}}}},
          {"paired_levels", 3},
          {"wcam", {{"samples", 128}, {"grid", 2}, {"levels", 3}, {"cells", 40}, {"filter", "haar"},
                    {"seed", 7}, {"top_k", 2}}},
          {"augment_preview", {{"blur_sigma", 2.0}, {"wp_fraction", 0.2}, {"wp_levels", {1}},
                               {"seed", 3}, {"count", 2}}},
          {"output_dir", "out"}};
}

// Writes 32 PNG tiles, manifest.csv, model.json and config.json into `dir`:
// 8 google/ign pairs of the same northern scenes (google at 10 cm/px, ign at
// 20 cm/px), 8 unpaired northern google tiles and 8 southern google tiles.
// Half of each group shows panels.
inline void generate_dataset(const std::filesystem::path& dir, std::uint64_t seed = 2024) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  Rng rng(seed);
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw IoError("cannot write toy manifest in '" + dir.string() + "'");
  manifest << kManifestHeader << '\n';
  auto emit = [&](const std::string& id, const Image& img, bool positive, const char* provider,
                  double gsd, const char* region, const std::string& pair) {
    const std::string rel = "images/" + id + ".png";
    write_png(dir / rel, img);
    manifest << id << ',' << rel << ',' << (positive ? "pv" : "no_pv") << ',' << provider << ','
             << gsd << ',' << region << ',' << pair << '\n';
  };
  for (int i = 0; i < 8; ++i) {
    const bool pos = i % 2 == 0;
    const Image g = scene(rng, pos, false);
    const std::string pair = "pair" + std::to_string(i);
    const double sigma = 0.4 + 0.15 * i;
    emit("n_pair" + std::to_string(i) + "_google", g, pos, "google", kSourceGsd, "north", pair);
    const Image coarse = area_resize(g, kSide / 2, kSide / 2);
    emit("n_pair" + std::to_string(i) + "_ign", other_provider(coarse, sigma, rng), pos, "ign",
         kTargetGsd, "north", pair);
  }
  for (int i = 0; i < 8; ++i)
    emit("n_single" + std::to_string(i), scene(rng, i % 2 == 0, false), i % 2 == 0, "google",
         kSourceGsd, "north", "");
  for (int i = 0; i < 8; ++i)
    emit("s_single" + std::to_string(i), scene(rng, i % 2 == 0, true), i % 2 == 0, "google",
         kSourceGsd, "south", "");
  std::ofstream(dir / "model.json", std::ios::trunc) << default_model().dump(2) << '\n';
  std::ofstream(dir / "config.json", std::ios::trunc) << default_config().dump(2) << '\n';
}

}  // namespace scaleshift::toy

#endif  // SCALESHIFT_TOY_HPP_
