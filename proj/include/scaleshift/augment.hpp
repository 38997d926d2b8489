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
#ifndef SCALESHIFT_AUGMENT_HPP_
#define SCALESHIFT_AUGMENT_HPP_

// Scale-targeted augmentations: deterministic Gaussian blur and random
// cancellation of wavelet coefficients at chosen levels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/rng.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

struct BlurConfig {
  double sigma = 2.0;

  // ceil(3 sigma)
  std::size_t radius() const { return static_cast<std::size_t>(std::ceil(3.0 * sigma)); }
};

inline std::vector<double> gaussian_kernel(const BlurConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw ArgumentError("gaussian blur: sigma must be > 0");
  const std::size_t r = cfg.radius();
  std::vector<double> k(2 * r + 1);
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(r);
    k[i] = std::exp(-0.5 * x * x / (cfg.sigma * cfg.sigma));
    s += k[i];
  }
  for (double& v : k) v /= s;
  return k;
}

namespace detail {

// Symmetric reflection with the edge sample repeated: -1 -> 0, n -> n - 1.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

}  // namespace detail

// Separable Gaussian convolution of every channel, reflective boundaries.
inline Image gaussian_blur(const Image& image, const BlurConfig& cfg) {
  const auto kernel = gaussian_kernel(cfg);
  const auto r = static_cast<std::ptrdiff_t>(cfg.radius());
  const std::size_t h = image.height(), w = image.width(), nc = image.channels();
  Image tmp(h, w, nc), out(h, w, nc);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < nc; ++c) {
        double s = 0.0;
        for (std::ptrdiff_t t = -r; t <= r; ++t)
          s += kernel[static_cast<std::size_t>(t + r)] *
               image(y, detail::reflect_index(static_cast<std::ptrdiff_t>(x) + t, w), c);
        tmp(y, x, c) = s;
      }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < nc; ++c) {
        double s = 0.0;
        for (std::ptrdiff_t t = -r; t <= r; ++t)
          s += kernel[static_cast<std::size_t>(t + r)] *
               tmp(detail::reflect_index(static_cast<std::ptrdiff_t>(y) + t, h), x, c);
        out(y, x, c) = s;
      }
  return out;
}

struct WaveletPerturbConfig {
  double cancel_fraction = 0.2;
  std::vector<int> target_levels{1};
  int levels = 0;  // decomposition depth; 0 means max(target_levels)
  WaveletFilter filter = haar();
  std::uint64_t seed = 0;

  int depth() const {
    return levels > 0 ? levels : *std::max_element(target_levels.begin(), target_levels.end());
  }

  void validate() const {
    if (!(cancel_fraction >= 0.0 && cancel_fraction <= 1.0))
      throw ArgumentError("wavelet perturbation: cancel_fraction must be in [0, 1]");
    if (target_levels.empty()) throw ArgumentError("wavelet perturbation: no target levels");
    for (int l : target_levels)
      if (l < 1) throw ArgumentError("wavelet perturbation: target levels start at 1");
    if (levels > 0 && *std::max_element(target_levels.begin(), target_levels.end()) > levels)
      throw ArgumentError("wavelet perturbation: target level deeper than decomposition");
  }
};

// Number of coefficients cancelled out of `n` candidates.
inline std::size_t cancel_count(double fraction, std::size_t n) {
  // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

// Per channel: decompose, zero floor(fraction * n) coefficients drawn
// uniformly without replacement from the union of the target subbands (n
// coefficients), reconstruct and clip to [0, 1]. Channels draw independent
// samples from one seeded stream.
inline Image wavelet_perturb(const Image& image, const WaveletPerturbConfig& cfg) {
  cfg.validate();
  const int depth = cfg.depth();
  const std::set<int> targets(cfg.target_levels.begin(), cfg.target_levels.end());
  Rng rng(cfg.seed);
  std::vector<Array2D> planes;
  planes.reserve(image.channels());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    WaveletPyramid pyr = dwt_forward(image.channel(c), cfg.filter, depth);
    std::vector<double*> candidates;
    for (int level : targets)
      for (Band b : {Band::horizontal, Band::vertical, Band::diagonal})
        for (double& v : pyr.detail(level, b).values()) candidates.push_back(&v);
    const std::size_t k = cancel_count(cfg.cancel_fraction, candidates.size());
    for (std::size_t idx : sample_without_replacement(rng, candidates.size(), k)) *candidates[idx] = 0.0;
    planes.push_back(dwt_inverse(pyr, cfg.filter));
  }
  Image out = Image::from_channels(planes);
  clip_unit(out);
  return out;
}

inline Image blur_then_perturb(const Image& image, const BlurConfig& blur,
                               const WaveletPerturbConfig& wp) {
  return wavelet_perturb(gaussian_blur(image, blur), wp);
}

// Serializable description of a training-time augmentation pipeline. Steps
// this library executes are "gaussian_blur" and "wavelet_perturb"; the
// remaining kinds ("random_crop", "random_rotation", "normalize") describe
// the trainer-side transforms and are skipped by apply().
struct AugmentStep {
  std::string op;
  nlohmann::json params = nlohmann::json::object();
};

struct AugmentPipeline {
  std::vector<AugmentStep> steps;

  // Blurring + WP followed by the usual trainer-side crop, rotation and
  // ImageNet normalization.
  static AugmentPipeline blur_and_wavelet_perturbation(const BlurConfig& blur,
                                                       const WaveletPerturbConfig& wp) {
    AugmentPipeline p;
    p.steps.push_back({"gaussian_blur", {{"sigma", blur.sigma}}});
    p.steps.push_back({"wavelet_perturb",
                       {{"cancel_fraction", wp.cancel_fraction},
                        {"target_levels", wp.target_levels},
                        {"levels", wp.depth()},
                        {"filter", wp.filter.name},
                        {"seed", wp.seed}}});
    p.steps.push_back({"random_crop", {{"size", 224}}});
    p.steps.push_back({"random_rotation", {{"angles", {0, 90, 180, 270}}}});
    p.steps.push_back({"normalize", {{"mean", {0.485, 0.456, 0.406}}, {"std", {0.229, 0.224, 0.225}}}});
    return p;
  }

  Image apply(const Image& image) const {
    Image out = image;
    for (const auto& s : steps) {
      if (s.op == "gaussian_blur") {
        out = gaussian_blur(out, BlurConfig{s.params.at("sigma").get<double>()});
      } else if (s.op == "wavelet_perturb") {
        WaveletPerturbConfig wp;
        wp.cancel_fraction = s.params.at("cancel_fraction").get<double>();
        wp.target_levels = s.params.at("target_levels").get<std::vector<int>>();
        wp.levels = s.params.value("levels", 0);
        wp.filter = filter_by_name(s.params.value("filter", std::string("haar")));
        wp.seed = s.params.value("seed", std::uint64_t{0});
        out = wavelet_perturb(out, wp);
      } else if (s.op != "random_crop" && s.op != "random_rotation" && s.op != "normalize") {
        throw ArgumentError("augment pipeline: unknown step '" + s.op + "'");
      }
    }
    return out;
  }
};

inline nlohmann::json to_json(const AugmentPipeline& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) steps.push_back({{"op", s.op}, {"params", s.params}});
  return {{"steps", steps}};
}

inline AugmentPipeline pipeline_from_json(const nlohmann::json& j) {
  AugmentPipeline p;
  for (const auto& s : j.at("steps"))
    p.steps.push_back({s.at("op").get<std::string>(), s.value("params", nlohmann::json::object())});
  return p;
}

}  // namespace scaleshift

#endif  // SCALESHIFT_AUGMENT_HPP_
