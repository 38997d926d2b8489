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
#ifndef SCALESHIFT_IMAGE_HPP_
#define SCALESHIFT_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scaleshift/error.hpp"

namespace scaleshift {

// Dense row-major 2D array of doubles.
class Array2D {
 public:
  Array2D() = default;
  Array2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  double sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }

  double energy() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  friend bool operator==(const Array2D&, const Array2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// H x W x C image with interleaved channels. Pixel values are expected in
// [0, 1]; the type itself does not enforce the range.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels),
        data_(height * width * channels, fill) {
    if (channels == 0) throw ArgumentError("image must have at least one channel");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t y, std::size_t x, std::size_t c = 0) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  double operator()(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Array2D channel(std::size_t c) const {
    if (c >= channels_) throw ArgumentError("channel index out of range");
    Array2D out(height_, width_);
    for (std::size_t y = 0; y < height_; ++y)
      for (std::size_t x = 0; x < width_; ++x) out(y, x) = (*this)(y, x, c);
    return out;
  }

  void set_channel(std::size_t c, const Array2D& plane) {
    if (c >= channels_) throw ArgumentError("channel index out of range");
    if (plane.rows() != height_ || plane.cols() != width_)
      throw DimensionError("channel plane shape does not match image");
    for (std::size_t y = 0; y < height_; ++y)
      for (std::size_t x = 0; x < width_; ++x) (*this)(y, x, c) = plane(y, x);
  }

  static Image from_channels(const std::vector<Array2D>& planes) {
    if (planes.empty()) throw ArgumentError("no channel planes given");
    Image img(planes.front().rows(), planes.front().cols(), planes.size());
    for (std::size_t c = 0; c < planes.size(); ++c) img.set_channel(c, planes[c]);
    return img;
  }

  double mean() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return data_.empty() ? 0.0 : s / static_cast<double>(data_.size());
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

inline void clip_unit(Image& img) {
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
}

inline void clip_unit(Array2D& a) {
  for (double& v : a.values()) v = std::clamp(v, 0.0, 1.0);
}

// Unweighted channel average.
inline Array2D luminance(const Image& img) {
  Array2D out(img.height(), img.width());
  const double inv = 1.0 / static_cast<double>(img.channels());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      double s = 0.0;
      for (std::size_t c = 0; c < img.channels(); ++c) s += img(y, x, c);
      out(y, x) = s * inv;
    }
  return out;
}

namespace detail {

// Weight of source cell [i, i+1) inside destination cell [lo, hi), both in
// source coordinates.
inline double overlap(double lo, double hi, std::size_t i) {
  const double a = std::max(lo, static_cast<double>(i));
  const double b = std::min(hi, static_cast<double>(i + 1));
  return std::max(0.0, b - a);
}

struct AxisWeights {
  std::vector<std::size_t> first;
  std::vector<std::vector<double>> weights;
};

inline AxisWeights area_weights(std::size_t src, std::size_t dst) {
  AxisWeights w;
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  w.first.resize(dst);
  w.weights.resize(dst);
  for (std::size_t d = 0; d < dst; ++d) {
    const double lo = d * scale;
    const double hi = (d + 1) * scale;
    const auto i0 = static_cast<std::size_t>(std::floor(lo));
    const auto i1 = std::min(src, static_cast<std::size_t>(std::ceil(hi)));
    w.first[d] = i0;
    for (std::size_t i = i0; i < i1; ++i) w.weights[d].push_back(overlap(lo, hi, i) / scale);
  }
  return w;
}

}  // namespace detail

// Area-averaging resize for shrinking (or identity). Every output pixel is
// the exact area-weighted mean of the source pixels it covers.
inline Image area_resize(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw DimensionError("area_resize: empty output size");
  if (out_h > img.height() || out_w > img.width())
    throw UnsupportedError("area_resize: upsampling is not supported");
  if (out_h == img.height() && out_w == img.width()) return img;
  const auto wy = detail::area_weights(img.height(), out_h);
  const auto wx = detail::area_weights(img.width(), out_w);
  Image out(out_h, out_w, img.channels());
  for (std::size_t oy = 0; oy < out_h; ++oy)
    for (std::size_t ox = 0; ox < out_w; ++ox)
      for (std::size_t c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (std::size_t a = 0; a < wy.weights[oy].size(); ++a)
          for (std::size_t b = 0; b < wx.weights[ox].size(); ++b)
            s += wy.weights[oy][a] * wx.weights[ox][b] *
                 img(wy.first[oy] + a, wx.first[ox] + b, c);
        out(oy, ox, c) = s;
      }
  return out;
}

}  // namespace scaleshift

#endif  // SCALESHIFT_IMAGE_HPP_
