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
#ifndef SCALESHIFT_GRID_HPP_
#define SCALESHIFT_GRID_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

// Flat tiling of the wavelet plane: every subband (the approximation and the
// 3 * levels detail bands) is cut into cells_per_side x cells_per_side
// equal cells. Cells are numbered subband-major in subband_order(), then
// row-major within the subband.
class WaveletGrid {
 public:
  WaveletGrid(std::size_t height, std::size_t width, int levels, std::size_t cells_per_side)
      : height_(height), width_(width), levels_(levels), g_(cells_per_side) {
    if (levels < 1) throw ArgumentError("grid: levels must be >= 1");
    if (cells_per_side < 1) throw ArgumentError("grid: cells_per_side must be >= 1");
    const std::size_t block = (std::size_t{1} << levels) * cells_per_side;
    if (height == 0 || height % block != 0)
      throw DimensionError("grid: height " + std::to_string(height) + " not divisible by " +
                           std::to_string(block) + " (2^levels * cells_per_side)");
    if (width == 0 || width % block != 0)
      throw DimensionError("grid: width " + std::to_string(width) + " not divisible by " +
                           std::to_string(block) + " (2^levels * cells_per_side)");
  }

  int levels() const noexcept { return levels_; }
  std::size_t cells_per_side() const noexcept { return g_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t subband_count() const noexcept { return 3 * static_cast<std::size_t>(levels_) + 1; }
  std::size_t cells_per_subband() const noexcept { return g_ * g_; }
  std::size_t total_cells() const noexcept { return subband_count() * cells_per_subband(); }

  // Shape of a subband at `level` (the approximation lives at `levels`).
  std::size_t subband_rows(int level) const { return height_ >> level; }
  std::size_t subband_cols(int level) const { return width_ >> level; }

  std::size_t cell_of(SubbandId id, std::size_t r, std::size_t c) const {
    const std::size_t ch = subband_rows(id.level) / g_;
    const std::size_t cw = subband_cols(id.level) / g_;
    return subband_index(id, levels_) * cells_per_subband() + (r / ch) * g_ + (c / cw);
  }

  SubbandId subband_of_cell(std::size_t cell) const {
    return subband_order(levels_).at(cell / cells_per_subband());
  }

  bool matches(const WaveletPyramid& pyr) const {
    return pyr.levels() == levels_ && pyr.height() == height_ && pyr.width() == width_;
  }

  friend bool operator==(const WaveletGrid&, const WaveletGrid&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  int levels_;
  std::size_t g_;
};

// Zeroes every coefficient whose cell has mask == 0 (the same cells in every
// channel) and leaves the rest untouched.
inline void mask_pyramid(WaveletPyramid& pyr, const WaveletGrid& grid,
                         std::span<const std::uint8_t> mask) {
  if (!grid.matches(pyr)) throw ArgumentError("apply_mask: grid does not match pyramid shape");
  if (mask.size() != grid.total_cells())
    throw ArgumentError("apply_mask: mask has " + std::to_string(mask.size()) +
                        " cells, grid has " + std::to_string(grid.total_cells()));
  const std::size_t g = grid.cells_per_side();
  for (const SubbandId id : subband_order(grid.levels())) {
    const std::size_t base = subband_index(id, grid.levels()) * grid.cells_per_subband();
    Array2D& band = pyr.subband(id);
    const std::size_t ch = band.rows() / g, cw = band.cols() / g;
    for (std::size_t cy = 0; cy < g; ++cy)
      for (std::size_t cx = 0; cx < g; ++cx) {
        if (mask[base + cy * g + cx] != 0) continue;
        for (std::size_t r = cy * ch; r < (cy + 1) * ch; ++r)
          for (std::size_t c = cx * cw; c < (cx + 1) * cw; ++c) band(r, c) = 0.0;
      }
  }
}

// Perturbed image: masked pyramids inverted and clipped to [0, 1].
inline Image apply_mask(const std::vector<WaveletPyramid>& pyramids, const WaveletGrid& grid,
                        std::span<const std::uint8_t> mask, const WaveletFilter& filter) {
  if (pyramids.empty()) throw ArgumentError("apply_mask: no pyramids");
  std::vector<Array2D> planes;
  planes.reserve(pyramids.size());
  for (const auto& p : pyramids) {
    WaveletPyramid masked = p;
    mask_pyramid(masked, grid, mask);
    planes.push_back(dwt_inverse(masked, filter));
  }
  Image out = Image::from_channels(planes);
  clip_unit(out);
  return out;
}

}  // namespace scaleshift

#endif  // SCALESHIFT_GRID_HPP_
