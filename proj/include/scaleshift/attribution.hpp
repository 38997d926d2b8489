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
#ifndef SCALESHIFT_ATTRIBUTION_HPP_
#define SCALESHIFT_ATTRIBUTION_HPP_

// Wavelet scale attribution: Sobol cell importances mapped back onto the
// wavelet plane, projected to pixel space and summarized per subband.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/grid.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/model.hpp"
#include "scaleshift/sensitivity.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

// One value per subband in subband_order(): the approximation first, then
// (horizontal, vertical, diagonal) from the coarsest level to level 1.
struct ScaleEmbedding {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const ScaleEmbedding&, const ScaleEmbedding&) = default;
};

struct WCAMResult {
  WaveletGrid grid;
  SobolEstimate estimate;
  Array2D wavelet_heatmap;     // H x W, dyadic layout
  Array2D spatial_projection;  // H x W
  ScaleEmbedding scale_embedding;
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;
  std::string filter_name;

  const std::vector<double>& importance() const { return estimate.total_indices; }
};

inline ScaleEmbedding scale_embedding(const WaveletGrid& grid, const std::vector<double>& importance) {
  if (importance.size() != grid.total_cells())
    throw ArgumentError("scale_embedding: importance length does not match grid");
  ScaleEmbedding z;
  z.values.assign(grid.subband_count(), 0.0);
  const std::size_t per = grid.cells_per_subband();
  for (std::size_t l = 0; l < grid.subband_count(); ++l)
    for (std::size_t c = 0; c < per; ++c) z.values[l] += importance[l * per + c];
  return z;
}

namespace detail {

// Top-left corner of a subband in the dyadic layout: the approximation in
// the top-left corner, each level's horizontal band to its right, the
// vertical band below it and the diagonal band diagonally across.
inline std::pair<std::size_t, std::size_t> layout_origin(const WaveletGrid& grid, SubbandId id) {
  const std::size_t h = grid.subband_rows(id.level), w = grid.subband_cols(id.level);
  switch (id.band) {
    case Band::approximation: return {0, 0};
    case Band::horizontal: return {0, w};
    case Band::vertical: return {h, 0};
    case Band::diagonal: return {h, w};
  }
  return {0, 0};
}

}  // namespace detail

// Piecewise-constant upsampling of the cell importances onto coefficient
// positions, arranged in the dyadic layout.
inline Array2D wavelet_heatmap(const WaveletGrid& grid, const std::vector<double>& importance) {
  if (importance.size() != grid.total_cells())
    throw ArgumentError("wavelet_heatmap: importance length does not match grid");
  Array2D out(grid.height(), grid.width());
  for (const SubbandId id : subband_order(grid.levels())) {
    const auto [r0, c0] = detail::layout_origin(grid, id);
    const std::size_t h = grid.subband_rows(id.level), w = grid.subband_cols(id.level);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) out(r0 + r, c0 + c) = importance[grid.cell_of(id, r, c)];
  }
  return out;
}

// Each subband's importance map is upsampled to H x W by nearest neighbour
// (a level-j coefficient covers a 2^j x 2^j pixel block) and all subbands
// are summed.
inline Array2D spatial_project(const WaveletGrid& grid, const std::vector<double>& importance) {
  if (importance.size() != grid.total_cells())
    throw ArgumentError("spatial_project: importance length does not match grid");
  Array2D out(grid.height(), grid.width());
  for (const SubbandId id : subband_order(grid.levels())) {
    const std::size_t factor = std::size_t{1} << id.level;
    for (std::size_t y = 0; y < grid.height(); ++y)
      for (std::size_t x = 0; x < grid.width(); ++x)
        out(y, x) += importance[grid.cell_of(id, y / factor, x / factor)];
  }
  return out;
}

inline WCAMResult assemble_wcam(const WaveletGrid& grid, SobolEstimate estimate,
                                std::uint64_t seed, std::size_t sample_count,
                                std::string filter_name) {
  WCAMResult res{grid, std::move(estimate), {}, {}, {}, seed, sample_count, std::move(filter_name)};
  res.wavelet_heatmap = wavelet_heatmap(grid, res.importance());
  res.spatial_projection = spatial_project(grid, res.importance());
  res.scale_embedding = scale_embedding(grid, res.importance());
  return res;
}

struct WCAMConfig {
  WaveletConfig wavelet;
  std::size_t sample_count = kDefaultSampleCount;
  std::string sequence_kind = "sobol";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline WCAMResult compute_wcam(const BlackBoxModel& model, const Image& image,
                               const WCAMConfig& cfg) {
  const WaveletGrid grid(image.height(), image.width(), cfg.wavelet.levels,
                         cfg.wavelet.cells_per_side);
  const MaskPlan plan{grid.total_cells(), cfg.sample_count, cfg.sequence_kind, cfg.seed};
  auto est = estimate_cell_importance(model, image, plan, cfg.wavelet, cfg.threads);
  return assemble_wcam(grid, std::move(est), cfg.seed, cfg.sample_count, cfg.wavelet.filter.name);
}

inline double embedding_distance(const ScaleEmbedding& a, const ScaleEmbedding& b) {
  if (a.size() != b.size())
    throw ArgumentError("embedding_distance: length " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(s);
}

// Euclidean distance between the cell importance vectors of two results.
inline double wcam_distance(const WCAMResult& a, const WCAMResult& b) {
  if (!(a.grid == b.grid)) throw ArgumentError("wcam_distance: results use different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.importance().size(); ++i) {
    const double d = a.importance()[i] - b.importance()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline nlohmann::json to_json(const WCAMResult& r) {
  nlohmann::json j;
  j["grid"] = {{"height", r.grid.height()},
               {"width", r.grid.width()},
               {"levels", r.grid.levels()},
               {"cells_per_side", r.grid.cells_per_side()},
               {"total_cells", r.grid.total_cells()}};
  j["filter"] = r.filter_name;
  j["importance"] = r.importance();
  j["embedding"] = r.scale_embedding.values;
  nlohmann::json names = nlohmann::json::array();
  for (const auto id : subband_order(r.grid.levels()))
    names.push_back(std::string(band_name(id.band)) + "@" + std::to_string(id.level));
  j["embedding_subbands"] = names;
  j["seed"] = r.seed;
  j["sample_count"] = r.sample_count;
  j["budget"] = r.estimate.budget_used;
  j["output_variance"] = r.estimate.output_variance;
  j["degenerate"] = r.estimate.degenerate;
  j["has_negative"] = r.estimate.has_negative;
  return j;
}

}  // namespace scaleshift

#endif  // SCALESHIFT_ATTRIBUTION_HPP_
