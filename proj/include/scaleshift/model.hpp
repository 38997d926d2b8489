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
#ifndef SCALESHIFT_MODEL_HPP_
#define SCALESHIFT_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>

#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

// Black-box binary classifier: maps an image to the probability of the
// positive class. Implementations must be deterministic per (model, image).
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  virtual double predict(const Image& image) const = 0;

  // Models returning false are always evaluated sequentially.
  virtual bool thread_safe() const { return true; }

  virtual std::string name() const = 0;

  // Identifies the model and its parameters in run reports.
  virtual std::string fingerprint() const { return name(); }
};

class ConstantModel final : public BlackBoxModel {
 public:
  explicit ConstantModel(double p) : p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("constant model probability outside [0, 1]");
  }
  double predict(const Image&) const override { return p_; }
  std::string name() const override { return "constant"; }
  std::string fingerprint() const override {
    std::ostringstream os;
    os << "constant(p=" << p_ << ")";
    return os.str();
  }

 private:
  double p_;
};

// Wraps a callable; used by tests and for quick experiments.
class FunctionModel final : public BlackBoxModel {
 public:
  FunctionModel(std::string name, std::function<double(const Image&)> fn, bool thread_safe = true)
      : name_(std::move(name)), fn_(std::move(fn)), thread_safe_(thread_safe) {}
  double predict(const Image& image) const override { return fn_(image); }
  bool thread_safe() const override { return thread_safe_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::function<double(const Image&)> fn_;
  bool thread_safe_;
};

// Energy of one subband of the luminance pyramid divided by `scale`, clipped
// to [0, 1]. Depends on nothing but that subband.
class SubbandEnergyModel final : public BlackBoxModel {
 public:
  SubbandEnergyModel(WaveletFilter filter, int levels, SubbandId target, double scale)
      : filter_(std::move(filter)), levels_(levels), target_(target), scale_(scale) {
    if (!(scale > 0.0)) throw ArgumentError("subband energy scale must be positive");
  }

  double predict(const Image& image) const override {
    const auto pyr = dwt_forward(luminance(image), filter_, levels_);
    return std::clamp(pyr.subband(target_).energy() / scale_, 0.0, 1.0);
  }

  std::string name() const override { return "subband_energy"; }
  std::string fingerprint() const override {
    std::ostringstream os;
    os << "subband_energy(filter=" << filter_.name << ",levels=" << levels_
       << ",level=" << target_.level << ",band=" << band_name(target_.band)
       << ",scale=" << scale_ << ")";
    return os.str();
  }

 private:
  WaveletFilter filter_;
  int levels_;
  SubbandId target_;
  double scale_;
};

// High-frequency detector: logistic function of the share of detail energy
// found at `level` (luminance, Haar). Fine periodic texture drives it to 1.
class DetailEnergyModel final : public BlackBoxModel {
 public:
  DetailEnergyModel(int level, int levels, double center, double gain)
      : level_(level), levels_(levels), center_(center), gain_(gain) {
    if (level < 1 || level > levels) throw ArgumentError("detail level out of range");
  }

  double score(const Image& image) const {
    const auto pyr = dwt_forward(luminance(image), haar(), levels_);
    double target = 0.0, total = 0.0;
    for (int j = 1; j <= levels_; ++j)
      for (Band b : {Band::horizontal, Band::vertical, Band::diagonal}) {
        const double e = pyr.detail(j, b).energy();
        total += e;
        if (j == level_) target += e;
      }
    return total > 0.0 ? target / total : 0.0;
  }

  double predict(const Image& image) const override {
    return 1.0 / (1.0 + std::exp(-gain_ * (score(image) - center_)));
  }

  std::string name() const override { return "detail_energy"; }
  std::string fingerprint() const override {
    std::ostringstream os;
    os << "detail_energy(level=" << level_ << ",levels=" << levels_ << ",center=" << center_
       << ",gain=" << gain_ << ")";
    return os.str();
  }

 private:
  int level_;
  int levels_;
  double center_;
  double gain_;
};

// FNV-1a over the raw pixel bytes and shape.
inline std::uint64_t image_hash(const Image& image) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::size_t shape[3] = {image.height(), image.width(), image.channels()};
  mix(shape, sizeof(shape));
  mix(image.values().data(), image.values().size_bytes());
  return h;
}

// Returns the true label of images registered through the side channel;
// unknown images raise ModelError.
class LabelOracleModel final : public BlackBoxModel {
 public:
  void register_image(const Image& image, bool positive) {
    labels_[image_hash(image)] = positive;
  }
  double predict(const Image& image) const override {
    const auto it = labels_.find(image_hash(image));
    if (it == labels_.end()) throw ModelError("label oracle: image not registered");
    return it->second ? 1.0 : 0.0;
  }
  std::string name() const override { return "label_oracle"; }

 private:
  std::unordered_map<std::uint64_t, bool> labels_;
};

}  // namespace scaleshift

#endif  // SCALESHIFT_MODEL_HPP_
