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
#ifndef SCALESHIFT_SENSITIVITY_HPP_
#define SCALESHIFT_SENSITIVITY_HPP_

// Binary quasi-Monte Carlo masks over K cells and total Sobol indices from
// black-box evaluations (Jansen's estimator).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/random/sobol.hpp>

#include "scaleshift/error.hpp"
#include "scaleshift/grid.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/model.hpp"
#include "scaleshift/parallel.hpp"
#include "scaleshift/rng.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

inline constexpr std::size_t kDefaultSampleCount = 128;

struct MaskPlan {
  std::size_t grid_cells = 1;                  // K
  std::size_t sample_count = kDefaultSampleCount;  // N
  std::string sequence_kind = "sobol";         // "sobol" or "random"
  std::uint64_t seed = 0;

  std::size_t budget() const { return sample_count * (grid_cells + 2); }

  void validate() const {
    if (grid_cells < 1) throw ArgumentError("mask plan: K must be >= 1");
    if (sample_count < 2) throw ArgumentError("mask plan: N must be >= 2");
    if (sequence_kind != "sobol" && sequence_kind != "random")
      throw ArgumentError("mask plan: unknown sequence kind '" + sequence_kind + "'");
  }
};

// N x K matrix of 0/1 entries, row-major.
class MaskMatrix {
 public:
  MaskMatrix() = default;
  MaskMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const std::uint8_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const std::uint8_t> values() const noexcept { return data_; }

  double mean() const {
    std::size_t ones = 0;
    for (auto v : data_) ones += v;
    return data_.empty() ? 0.0 : static_cast<double>(ones) / static_cast<double>(data_.size());
  }

  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

// A and B blocks plus the K "pick-freeze" blocks (A with column i taken from
// B). The pick blocks are materialized on request.
struct MaskBatch {
  MaskMatrix a_block;
  MaskMatrix b_block;

  std::size_t sample_count() const { return a_block.rows(); }
  std::size_t grid_cells() const { return a_block.cols(); }

  MaskMatrix pick_block(std::size_t i) const {
    if (i >= grid_cells()) throw ArgumentError("pick_block: cell index out of range");
    MaskMatrix m = a_block;
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, i) = b_block(r, i);
    return m;
  }

  // Row `r` of pick_block(i), written into `out`.
  void pick_row(std::size_t i, std::size_t r, std::vector<std::uint8_t>& out) const {
    const auto a = a_block.row(r);
    out.assign(a.begin(), a.end());
    out[i] = b_block(r, i);
  }

  friend bool operator==(const MaskBatch&, const MaskBatch&) = default;
};

// Draws 2K-dimensional points and thresholds each coordinate at 0.5: the
// first K coordinates form a row of A, the last K a row of B. For "sobol"
// the seed selects the starting index of the sequence and a random digital
// shift of each coordinate.
inline MaskBatch generate_masks(const MaskPlan& plan) {
  plan.validate();
  const std::size_t n = plan.sample_count, k = plan.grid_cells, dim = 2 * k;
  MaskBatch batch{MaskMatrix(n, k), MaskMatrix(n, k)};
  Rng rng(plan.seed);

  auto store = [&](std::size_t r, std::size_t d, std::uint8_t bit) {
    if (d < k)
      batch.a_block(r, d) = bit;
    else
      batch.b_block(r, d - k) = bit;
  };

  if (plan.sequence_kind == "random") {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t d = 0; d < dim; ++d) store(r, d, static_cast<std::uint8_t>(rng() >> 63));
    return batch;
  }

  std::vector<std::uint8_t> shift(dim);
  for (auto& s : shift) s = static_cast<std::uint8_t>(rng() >> 63);
  boost::random::sobol qrng(dim);
  // The origin is skipped; the remaining offset depends on the seed.
  const std::uint64_t skip = 1 + (plan.seed == 0 ? 0 : uniform_index(rng, 1u << 16));
  qrng.discard(skip * dim);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t d = 0; d < dim; ++d) {
      const auto top = static_cast<std::uint8_t>((qrng() >> 63) & 1u);
      store(r, d, static_cast<std::uint8_t>(top ^ shift[d]));
    }
  return batch;
}

struct SobolEstimate {
  std::vector<double> total_indices;
  double output_variance = 0.0;
  std::size_t budget_used = 0;
  // Output variance was zero; indices are all zero instead of NaN.
  bool degenerate = false;
  // At least one estimated index is negative (estimation noise, not clamped).
  bool has_negative = false;
};

// Sample variance with the n - 1 denominator.
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

// S_T[i] = (1 / 2N) * sum_j (f_a[j] - f_pick[i][j])^2 / Var(f_a).
inline SobolEstimate jansen_total_indices(std::span<const double> f_a,
                                          const std::vector<std::vector<double>>& f_pick) {
  const std::size_t n = f_a.size();
  if (n < 2) throw ArgumentError("jansen: need at least two samples");
  for (const auto& fp : f_pick)
    if (fp.size() != n) throw ArgumentError("jansen: pick-freeze output length mismatch");

  SobolEstimate est;
  est.total_indices.assign(f_pick.size(), 0.0);
  est.output_variance = sample_variance(f_a);
  est.budget_used = n * (f_pick.size() + 1);
  if (!(est.output_variance > 0.0)) {
    est.output_variance = 0.0;
    est.degenerate = true;
    return est;
  }
  for (std::size_t i = 0; i < f_pick.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = f_a[j] - f_pick[i][j];
      acc += d * d;
    }
    est.total_indices[i] = acc / (2.0 * static_cast<double>(n)) / est.output_variance;
    if (est.total_indices[i] < 0.0) est.has_negative = true;
  }
  return est;
}

// Evaluates `f` on every mask of the batch (A, B and all pick-freeze blocks,
// N(K+2) calls) and returns the Jansen estimate. `f` is called concurrently
// when threads != 1.
inline SobolEstimate estimate_total_indices(
    const MaskBatch& batch,
    const std::function<double(std::span<const std::uint8_t>)>& f, std::size_t threads = 1) {
  const std::size_t n = batch.sample_count(), k = batch.grid_cells();
  // Output slots: [0, n) for A, [n, 2n) for B, then n per pick block.
  std::vector<double> out(n * (k + 2));
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    const std::size_t block = idx / n, r = idx % n;
    if (block == 0) {
      out[idx] = f(batch.a_block.row(r));
    } else if (block == 1) {
      out[idx] = f(batch.b_block.row(r));
    } else {
      thread_local std::vector<std::uint8_t> row;
      batch.pick_row(block - 2, r, row);
      out[idx] = f(row);
    }
  });
  std::vector<std::vector<double>> picks(k);
  for (std::size_t i = 0; i < k; ++i)
    picks[i].assign(out.begin() + static_cast<std::ptrdiff_t>((i + 2) * n),
                    out.begin() + static_cast<std::ptrdiff_t>((i + 3) * n));
  SobolEstimate est = jansen_total_indices(std::span<const double>(out.data(), n), picks);
  est.budget_used = out.size();
  return est;
}

struct WaveletConfig {
  WaveletFilter filter = haar();
  int levels = 3;
  std::size_t cells_per_side = 4;
};

// Cell importance of `image` for `model`: masks -> perturbed images ->
// N(K+2) model calls -> Jansen estimate. plan.grid_cells must equal the grid
// size implied by `cfg`.
inline SobolEstimate estimate_cell_importance(const BlackBoxModel& model, const Image& image,
                                              const MaskPlan& plan, const WaveletConfig& cfg,
                                              std::size_t threads = 1) {
  const WaveletGrid grid(image.height(), image.width(), cfg.levels, cfg.cells_per_side);
  if (plan.grid_cells != grid.total_cells())
    throw ArgumentError("mask plan K=" + std::to_string(plan.grid_cells) +
                        " does not match grid with " + std::to_string(grid.total_cells()) +
                        " cells");
  const auto pyramids = dwt_image(image, cfg.filter, cfg.levels);
  const MaskBatch batch = generate_masks(plan);
  return estimate_total_indices(
      batch,
      [&](std::span<const std::uint8_t> mask) {
        return model.predict(apply_mask(pyramids, grid, mask, cfg.filter));
      },
      model.thread_safe() ? threads : 1);
}

}  // namespace scaleshift

#endif  // SCALESHIFT_SENSITIVITY_HPP_
