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
#ifndef SCALESHIFT_FFT_HPP_
#define SCALESHIFT_FFT_HPP_

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include "scaleshift/error.hpp"

namespace scaleshift::fft {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// The FFTW planner is not thread-safe; execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

// 2D DFT of a row-major rows x cols grid, in place. The forward transform is
// unnormalized; the inverse includes the 1 / (rows * cols) factor. Work
// buffers come from fftw_malloc so the chosen plan never depends on the
// caller's alignment.
inline void transform_2d(std::vector<Complex>& grid, std::size_t rows, std::size_t cols,
                         bool inverse) {
  if (rows == 0 || cols == 0 || grid.size() != rows * cols)
    throw DimensionError("fft: grid size does not match rows x cols");
  const std::size_t n = rows * cols;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!buf) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  std::copy(grid.begin(), grid.end(), reinterpret_cast<Complex*>(buf));
  fftw_execute(plan);
  const Complex* out = reinterpret_cast<const Complex*>(buf);
  const double s = inverse ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::size_t i = 0; i < n; ++i) grid[i] = out[i] * s;
  {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
}

}  // namespace scaleshift::fft

#endif  // SCALESHIFT_FFT_HPP_
