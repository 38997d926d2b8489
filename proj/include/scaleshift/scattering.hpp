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
#ifndef SCALESHIFT_SCATTERING_HPP_
#define SCALESHIFT_SCATTERING_HPP_

// Scattering-transform features with an oriented Morlet filter bank, and a
// logistic-regression head trained on them.
//
// Path set: with depth m and J orientations the bank holds m scales per
// orientation. First-order paths are all (scale, orientation) pairs (mJ
// coefficients). Second-order paths cascade |.| of a first-order response
// into a second filter with a strictly larger orientation index, over all
// m x m scale pairs (m^2 J(J-1)/2 coefficients).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/fft.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/model.hpp"

namespace scaleshift {

struct ScatteringConfig {
  int depth = 2;            // m, 1..3
  int orientations = 8;     // J
  int scales_per_octave = 1;
  std::size_t input_size = 64;
  std::size_t pooling = 1;  // output spatial pooling grid is pooling x pooling

  void validate() const {
    if (depth < 1 || depth > 3) throw ArgumentError("scattering: depth must be in [1, 3]");
    if (orientations < 1) throw ArgumentError("scattering: orientations must be >= 1");
    if (scales_per_octave < 1) throw ArgumentError("scattering: scales_per_octave must be >= 1");
    if (!fft::is_power_of_two(input_size) || input_size < 8)
      throw ArgumentError("scattering: input_size must be a power of two >= 8");
    if (pooling < 1 || input_size % pooling != 0)
      throw ArgumentError("scattering: pooling must divide input_size");
  }

  // mJ + m^2 J (J - 1) / 2 per pooled location.
  std::size_t paths_per_location() const {
    const std::size_t m = static_cast<std::size_t>(depth), j = static_cast<std::size_t>(orientations);
    return m * j + m * m * j * (j - 1) / 2;
  }

  std::size_t feature_length() const { return paths_per_location() * pooling * pooling; }

  std::string fingerprint() const {
    std::ostringstream os;
    os << "scattering(m=" << depth << ",J=" << orientations << ",Q=" << scales_per_octave
       << ",size=" << input_size << ",pool=" << pooling << ")";
    return os.str();
  }
};

struct ScatteringPath {
  int order = 1;
  int scale1 = 0, orientation1 = 0;
  int scale2 = -1, orientation2 = -1;
  std::size_t pool_row = 0, pool_col = 0;
};

struct ScatteringFeatures {
  std::vector<double> values;
  std::vector<ScatteringPath> paths;

  std::size_t size() const noexcept { return values.size(); }
};

class ScatteringNetwork {
 public:
  explicit ScatteringNetwork(ScatteringConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t n = cfg_.input_size;
    for (int s = 0; s < cfg_.depth; ++s)
      for (int o = 0; o < cfg_.orientations; ++o) bank_.push_back(morlet(n, s, o));
  }

  const ScatteringConfig& config() const noexcept { return cfg_; }

  // Frequency response of filter (scale, orientation), row-major n x n.
  const std::vector<double>& filter(int scale, int orientation) const {
    return bank_.at(static_cast<std::size_t>(scale * cfg_.orientations + orientation));
  }

  // Grayscale, area-downsampled to input_size. Rejects non-square inputs and
  // sizes that are not a multiple of input_size.
  Array2D prepare(const Image& image) const {
    const std::size_t n = cfg_.input_size;
    if (image.height() != image.width())
      throw ArgumentError("scattering: input must be square, got " +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()));
    if (image.height() < n || image.height() % n != 0)
      throw ArgumentError("scattering: input side " + std::to_string(image.height()) +
                          " is not a multiple of " + std::to_string(n));
    return luminance(area_resize(image, n, n));
  }

  ScatteringFeatures forward(const Image& image) const { return forward_plane(prepare(image)); }

  ScatteringFeatures forward_plane(const Array2D& plane) const {
    const std::size_t n = cfg_.input_size;
    if (plane.rows() != n || plane.cols() != n)
      throw ArgumentError("scattering: plane must be input_size x input_size");
    const int m = cfg_.depth, nj = cfg_.orientations;
    std::vector<fft::Complex> spectrum(n * n);
    for (std::size_t i = 0; i < n * n; ++i) spectrum[i] = plane.values()[i];
    fft::transform_2d(spectrum, n, n, false);

    ScatteringFeatures out;
    out.values.reserve(cfg_.feature_length());
    out.paths.reserve(cfg_.feature_length());

    std::vector<std::vector<double>> first(bank_.size());
    for (int s = 0; s < m; ++s)
      for (int o = 0; o < nj; ++o) {
        auto& u = first[static_cast<std::size_t>(s * nj + o)];
        u = modulus_response(spectrum, filter(s, o));
        pool(u, {1, s, o, -1, -1, 0, 0}, out);
      }
    for (int s1 = 0; s1 < m; ++s1)
      for (int o1 = 0; o1 < nj; ++o1) {
        const auto& u1 = first[static_cast<std::size_t>(s1 * nj + o1)];
        std::vector<fft::Complex> u1_hat(u1.begin(), u1.end());
        fft::transform_2d(u1_hat, n, n, false);
        for (int s2 = 0; s2 < m; ++s2)
          for (int o2 = o1 + 1; o2 < nj; ++o2)
            pool(modulus_response(u1_hat, filter(s2, o2)), {2, s1, o1, s2, o2, 0, 0}, out);
      }
    return out;
  }

 private:
  std::vector<double> modulus_response(const std::vector<fft::Complex>& spectrum,
                                       const std::vector<double>& response) const {
    const std::size_t n = cfg_.input_size;
    std::vector<fft::Complex> prod(n * n);
    for (std::size_t i = 0; i < n * n; ++i) prod[i] = spectrum[i] * response[i];
    fft::transform_2d(prod, n, n, true);
    std::vector<double> u(n * n);
    for (std::size_t i = 0; i < n * n; ++i) u[i] = std::abs(prod[i]);
    return u;
  }

  // Block averages over the pooling grid, appended in row-major order.
  void pool(const std::vector<double>& u, ScatteringPath path, ScatteringFeatures& out) const {
    const std::size_t n = cfg_.input_size, p = cfg_.pooling, b = n / p;
    const double inv = 1.0 / static_cast<double>(b * b);
    for (std::size_t pr = 0; pr < p; ++pr)
      for (std::size_t pc = 0; pc < p; ++pc) {
        double s = 0.0;
        for (std::size_t y = pr * b; y < (pr + 1) * b; ++y)
          for (std::size_t x = pc * b; x < (pc + 1) * b; ++x) s += u[y * n + x];
        path.pool_row = pr;
        path.pool_col = pc;
        out.values.push_back(s * inv);
        out.paths.push_back(path);
      }
  }

  // Morlet-style filter: oriented Gaussian bump at radius xi, minus a scaled
  // envelope so the periodized response vanishes at DC.
  std::vector<double> morlet(std::size_t n, int scale, int orientation) const {
    const double pi = std::numbers::pi;
    const double q = static_cast<double>(cfg_.scales_per_octave);
    const double xi = 0.75 * pi * std::pow(2.0, -scale / q);
    const double sigma = 0.8 * std::pow(2.0, scale / q);
    const double theta = pi * orientation / cfg_.orientations;
    const double ct = std::cos(theta), st = std::sin(theta);
    constexpr double kSlant = 2.0;  // angular sharpening

    auto gauss = [&](double wy, double wx, double centre) {
      const double u = wx * ct + wy * st - centre;
      const double v = (-wx * st + wy * ct) * kSlant;
      return std::exp(-0.5 * sigma * sigma * (u * u + v * v));
    };
    auto periodized = [&](double wy, double wx, double centre) {
      double s = 0.0;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) s += gauss(wy + 2 * pi * a, wx + 2 * pi * b, centre);
      return s;
    };
    const double kappa = periodized(0.0, 0.0, xi) / periodized(0.0, 0.0, 0.0);
    std::vector<double> resp(n * n);
    for (std::size_t ky = 0; ky < n; ++ky)
      for (std::size_t kx = 0; kx < n; ++kx) {
        const double wy = 2 * pi * (ky < n / 2 ? double(ky) : double(ky) - double(n)) / double(n);
        const double wx = 2 * pi * (kx < n / 2 ? double(kx) : double(kx) - double(n)) / double(n);
        resp[ky * n + kx] = periodized(wy, wx, xi) - kappa * periodized(wy, wx, 0.0);
      }
    return resp;
  }

  ScatteringConfig cfg_;
  std::vector<std::vector<double>> bank_;
};

inline ScatteringFeatures scattering_forward(const Image& image, const ScatteringConfig& cfg) {
  return ScatteringNetwork(cfg).forward(image);
}

// ---------------------------------------------------------------------------
// Linear head

struct LinearHead {
  std::vector<double> weights;
  double bias = 0.0;
  // Per-feature standardization applied before the linear map.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  bool trained = false;
  std::string config_fingerprint;
};

struct HeadParams {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int epochs = 500;
  bool standardize = true;
  std::uint64_t seed = 0;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mean binary cross-entropy of sigmoid(Xw + b) plus (l2 / 2) |w|^2.
inline double logistic_loss(const std::vector<double>& w, double b,
                            const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[i][k];
    // log(1 + e^z) - y z, computed stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - y[i] * z;
  }
  loss /= static_cast<double>(x.size());
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return loss + 0.5 * l2 * reg;
}

// Gradient of logistic_loss; the last entry is d/db.
inline std::vector<double> logistic_gradient(const std::vector<double>& w, double b,
                                             const std::vector<std::vector<double>>& x,
                                             const std::vector<int>& y, double l2) {
  std::vector<double> g(w.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[i][k];
    const double r = sigmoid(z) - y[i];
    for (std::size_t k = 0; k < w.size(); ++k) g[k] += r * x[i][k];
    g.back() += r;
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  for (auto& v : g) v *= inv;
  for (std::size_t k = 0; k < w.size(); ++k) g[k] += l2 * w[k];
  return g;
}

struct FitResult {
  LinearHead head;
  std::vector<double> loss_history;  // loss before each epoch, then final
};

inline std::vector<double> standardize_row(const LinearHead& head, std::span<const double> f) {
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    out[k] = (f[k] - head.feature_mean[k]) / head.feature_scale[k];
  return out;
}

// Full-batch gradient descent from zero. A step that would increase the loss
// is retried with half the step size, so the loss history never increases.
inline FitResult fit_head(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, const HeadParams& params = {}) {
  if (features.size() != labels.size())
    throw ArgumentError("fit_head: features and labels differ in length");
  if (features.empty()) throw TrainingError("fit_head: empty training set");
  const std::size_t d = features.front().size();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw ArgumentError("fit_head: feature lengths differ");
    if (labels[i] != 0 && labels[i] != 1) throw ArgumentError("fit_head: labels must be 0 or 1");
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw TrainingError("fit_head: training data has a single class");
  if (pos < 2 || neg < 2) throw TrainingError("fit_head: need at least two examples per class");

  FitResult res;
  LinearHead& head = res.head;
  head.feature_mean.assign(d, 0.0);
  head.feature_scale.assign(d, 1.0);
  if (params.standardize) {
    const double n = static_cast<double>(features.size());
    for (const auto& f : features)
      for (std::size_t k = 0; k < d; ++k) head.feature_mean[k] += f[k] / n;
    std::vector<double> var(d, 0.0);
    for (const auto& f : features)
      for (std::size_t k = 0; k < d; ++k)
        var[k] += (f[k] - head.feature_mean[k]) * (f[k] - head.feature_mean[k]) / n;
    for (std::size_t k = 0; k < d; ++k) head.feature_scale[k] = var[k] > 1e-24 ? std::sqrt(var[k]) : 1.0;
  }
  std::vector<std::vector<double>> x;
  x.reserve(features.size());
  for (const auto& f : features) x.push_back(standardize_row(head, f));

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double loss = logistic_loss(w, b, x, labels, params.l2);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    res.loss_history.push_back(loss);
    const auto g = logistic_gradient(w, b, x, labels, params.l2);
    double step = params.learning_rate;
    for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
      std::vector<double> w2(d);
      for (std::size_t k = 0; k < d; ++k) w2[k] = w[k] - step * g[k];
      const double b2 = b - step * g.back();
      const double l2loss = logistic_loss(w2, b2, x, labels, params.l2);
      if (l2loss <= loss) {
        w = std::move(w2);
        b = b2;
        loss = l2loss;
        break;
      }
    }
  }
  res.loss_history.push_back(loss);
  head.weights = std::move(w);
  head.bias = b;
  head.trained = true;
  return res;
}

inline double predict(const LinearHead& head, std::span<const double> features) {
  if (!head.trained) throw StateError("predict: head has not been trained");
  if (features.size() != head.weights.size())
    throw ArgumentError("predict: expected " + std::to_string(head.weights.size()) +
                        " features, got " + std::to_string(features.size()));
  double z = head.bias;
  for (std::size_t k = 0; k < features.size(); ++k)
    z += head.weights[k] * (features[k] - head.feature_mean[k]) / head.feature_scale[k];
  return sigmoid(z);
}

inline double predict(const LinearHead& head, const ScatteringFeatures& f) {
  return predict(head, std::span<const double>(f.values));
}

inline nlohmann::json to_json(const ScatteringConfig& c) {
  return {{"depth", c.depth},
          {"orientations", c.orientations},
          {"scales_per_octave", c.scales_per_octave},
          {"input_size", c.input_size},
          {"pooling", c.pooling}};
}

inline ScatteringConfig scattering_config_from_json(const nlohmann::json& j) {
  ScatteringConfig c;
  c.depth = j.value("depth", c.depth);
  c.orientations = j.value("orientations", c.orientations);
  c.scales_per_octave = j.value("scales_per_octave", c.scales_per_octave);
  c.input_size = j.value("input_size", c.input_size);
  c.pooling = j.value("pooling", c.pooling);
  c.validate();
  return c;
}

inline nlohmann::json head_to_json(const LinearHead& head, const ScatteringConfig& cfg) {
  return {{"kind", "scattering"},
          {"config", to_json(cfg)},
          {"config_fingerprint", cfg.fingerprint()},
          {"weights", head.weights},
          {"bias", head.bias},
          {"feature_mean", head.feature_mean},
          {"feature_scale", head.feature_scale},
          {"trained", head.trained}};
}

inline LinearHead head_from_json(const nlohmann::json& j, ScatteringConfig* cfg_out = nullptr) {
  LinearHead head;
  const ScatteringConfig cfg = scattering_config_from_json(j.at("config"));
  head.weights = j.at("weights").get<std::vector<double>>();
  head.bias = j.at("bias").get<double>();
  head.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  head.feature_scale = j.at("feature_scale").get<std::vector<double>>();
  head.trained = j.at("trained").get<bool>();
  head.config_fingerprint = j.value("config_fingerprint", cfg.fingerprint());
  if (head.weights.size() != cfg.feature_length() || head.feature_mean.size() != head.weights.size() ||
      head.feature_scale.size() != head.weights.size())
    throw ArgumentError("head file: weight length does not match its scattering config");
  if (cfg_out) *cfg_out = cfg;
  return head;
}

// Scattering features followed by a trained head, as a black-box model.
class ScatteringModel final : public BlackBoxModel {
 public:
  ScatteringModel(ScatteringConfig cfg, LinearHead head)
      : net_(std::make_shared<const ScatteringNetwork>(cfg)), head_(std::move(head)) {
    if (!head_.trained) throw StateError("scattering model: head has not been trained");
  }
  double predict(const Image& image) const override {
    return scaleshift::predict(head_, net_->forward(image));
  }
  std::string name() const override { return "scattering"; }
  std::string fingerprint() const override { return net_->config().fingerprint(); }

 private:
  std::shared_ptr<const ScatteringNetwork> net_;
  LinearHead head_;
};

}  // namespace scaleshift

#endif  // SCALESHIFT_SCATTERING_HPP_
