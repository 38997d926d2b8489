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
#include "scaleshift/augment.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace scaleshift {
namespace {

using testing::max_abs_diff;
using testing::random_image;

double total_variation(const Image& img) {
  double tv = 0.0;
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x) {
        if (x + 1 < img.width()) tv += std::abs(img(y, x + 1, c) - img(y, x, c));
        if (y + 1 < img.height()) tv += std::abs(img(y + 1, x, c) - img(y, x, c));
      }
  return tv;
}

double finest_energy(const Image& img) {
  double e = 0.0;
  for (const auto& p : dwt_image(img, haar(), 1))
    for (Band b : {Band::horizontal, Band::vertical, Band::diagonal}) e += p.detail(1, b).energy();
  return e;
}

// Number of coefficients that differ between two pyramids, per subband.
std::size_t changed(const Array2D& a, const Array2D& b, double tol = 1e-8) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += std::abs(a.values()[i] - b.values()[i]) > tol;
  return n;
}

TEST(GaussianKernelTest, NormalizedAndNonNegative) {
  const auto k = gaussian_kernel({2.0});
  EXPECT_EQ(k.size(), 13u);  // radius ceil(3 * 2) = 6
  double s = 0.0;
  for (double v : k) {
    EXPECT_GE(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(gaussian_kernel({0.0}), ArgumentError);
  EXPECT_THROW(gaussian_blur(Image(8, 8, 1), {-1.0}), ArgumentError);
}

TEST(GaussianBlurTest, ConstantImageUnchanged) {
  const Image img(16, 16, 3, 0.42);
  EXPECT_LE(max_abs_diff(gaussian_blur(img, {}), img), 1e-15);
}

TEST(GaussianBlurTest, ImpulseResponseIsTheKernel) {
  Image img(33, 33, 1, 0.0);
  img(16, 16) = 1.0;
  const Image out = gaussian_blur(img, {2.0});
  const auto k = gaussian_kernel({2.0});
  double s = 0.0;
  for (std::size_t y = 0; y < 33; ++y)
    for (std::size_t x = 0; x < 33; ++x) {
      s += out(y, x);
      const long dy = long(y) - 16, dx = long(x) - 16;
      const double expected = (std::abs(dy) <= 6 && std::abs(dx) <= 6) ? k[dy + 6] * k[dx + 6] : 0.0;
      EXPECT_NEAR(out(y, x), expected, 1e-15);
    }
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(GaussianBlurTest, PreservesMeanOfInteriorContent) {
  Image img(64, 64, 1, 0.0);
  for (std::size_t y = 24; y < 40; ++y)
    for (std::size_t x = 20; x < 44; ++x) img(y, x) = 0.8;
  EXPECT_NEAR(gaussian_blur(img, {}).mean(), img.mean(), 1e-6);
}

TEST(GaussianBlurTest, RemovesPixelScaleCheckerboard) {
  Image board(64, 64, 1);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) board(y, x) = (x + y) % 2 ? 1.0 : 0.0;
  const double before = finest_energy(board);
  const double after = finest_energy(gaussian_blur(board, {2.0}));
  EXPECT_GT(before, 0.0);
  EXPECT_LT(after, 0.1 * before);
}

TEST(GaussianBlurTest, TotalVariationDoesNotIncrease) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image img = random_image(24, 20, 3, seed);
    for (double sigma : {0.5, 1.0, 2.0, 5.0})
      EXPECT_LE(total_variation(gaussian_blur(img, {sigma})), total_variation(img) + 1e-9);
  }
}

TEST(WaveletPerturbTest, ZeroFractionIsIdentity) {
  const Image img = random_image(32, 32, 3, 1);
  WaveletPerturbConfig cfg;
  cfg.cancel_fraction = 0.0;
  EXPECT_LE(max_abs_diff(wavelet_perturb(img, cfg), img), 1e-8);
}

TEST(WaveletPerturbTest, FullCancellationOfFinestLevel) {
  const Image img = random_image(32, 32, 3, 2);
  WaveletPerturbConfig cfg;
  cfg.cancel_fraction = 1.0;
  cfg.levels = 3;
  const Image out = wavelet_perturb(img, cfg);
  const auto before = dwt_image(img, haar(), 3), after = dwt_image(out, haar(), 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (const auto id : subband_order(3)) {
      if (id.level == 1 && id.band != Band::approximation) {
        for (double v : after[c].subband(id).values()) EXPECT_NEAR(v, 0.0, 1e-8);
      } else {
        EXPECT_LE(max_abs_diff(after[c].subband(id), before[c].subband(id)), 1e-8);
      }
    }
}

TEST(WaveletPerturbTest, CancelsExactlyFloorFractionTimesN) {
  const Image img = random_image(64, 64, 3, 3, 0.4, 0.6);
  for (const std::vector<int>& targets : {std::vector<int>{1}, std::vector<int>{1, 2}, std::vector<int>{3}}) {
    WaveletPerturbConfig cfg;
    cfg.cancel_fraction = 0.2;
    cfg.target_levels = targets;
    cfg.levels = 3;
    cfg.seed = 9;
    const Image out = wavelet_perturb(img, cfg);
    const auto before = dwt_image(img, haar(), 3), after = dwt_image(out, haar(), 3);
    std::size_t n = 0;
    for (int l : targets) n += 3 * (64u >> l) * (64u >> l);
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t zeroed = 0;
      for (const auto id : subband_order(3)) {
        const bool target = id.band != Band::approximation &&
                            std::find(targets.begin(), targets.end(), id.level) != targets.end();
        const std::size_t diff = changed(before[c].subband(id), after[c].subband(id));
        if (target) {
          zeroed += diff;
          for (std::size_t i = 0; i < after[c].subband(id).size(); ++i)
            if (std::abs(after[c].subband(id).values()[i] - before[c].subband(id).values()[i]) > 1e-8) {
              EXPECT_NEAR(after[c].subband(id).values()[i], 0.0, 1e-8);
            }
        } else {
          EXPECT_EQ(diff, 0u);
        }
      }
      EXPECT_EQ(zeroed, static_cast<std::size_t>(std::floor(0.2 * double(n))));
    }
  }
}

TEST(WaveletPerturbTest, ChannelsArePerturbedIndependently) {
  Image img(32, 32, 2);
  const Image base = random_image(32, 32, 1, 4, 0.4, 0.6);
  img.set_channel(0, base.channel(0));
  img.set_channel(1, base.channel(0));
  WaveletPerturbConfig cfg;
  cfg.seed = 1;
  const Image out = wavelet_perturb(img, cfg);
  EXPECT_GT(max_abs_diff(Image::from_channels({out.channel(0)}), Image::from_channels({out.channel(1)})), 0.0);
}

TEST(WaveletPerturbTest, DeterministicBoundedAndValidated) {
  const Image img = random_image(32, 32, 3, 5);
  WaveletPerturbConfig cfg;
  cfg.cancel_fraction = 0.5;
  cfg.target_levels = {1, 2};
  cfg.seed = 77;
  const Image a = wavelet_perturb(img, cfg), b = wavelet_perturb(img, cfg);
  EXPECT_EQ(a, b);
  for (double v : a.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  cfg.cancel_fraction = 1.2;
  EXPECT_THROW(wavelet_perturb(img, cfg), ArgumentError);
  cfg.cancel_fraction = 0.2;
  cfg.target_levels.clear();
  EXPECT_THROW(wavelet_perturb(img, cfg), ArgumentError);
  cfg.target_levels = {1};
  EXPECT_THROW(wavelet_perturb(random_image(31, 32, 1, 1), cfg), DimensionError);
}

TEST(CancelCountTest, FloorsTheProduct) {
  EXPECT_EQ(cancel_count(0.2, 768), 153u);
  EXPECT_EQ(cancel_count(0.29, 100), 29u);
  EXPECT_EQ(cancel_count(1.0, 5), 5u);
  EXPECT_EQ(cancel_count(0.0, 5), 0u);
}

TEST(BlurThenPerturbTest, Composition) {
  const Image img = random_image(32, 32, 3, 6);
  WaveletPerturbConfig none;
  none.cancel_fraction = 0.0;
  EXPECT_LE(max_abs_diff(blur_then_perturb(img, {}, none), gaussian_blur(img, {})), 1e-8);

  const Image flat(32, 32, 3, 0.3);
  WaveletPerturbConfig wp;
  EXPECT_LE(max_abs_diff(blur_then_perturb(flat, {}, wp), flat), 1e-12);

  wp.seed = 5;
  EXPECT_EQ(blur_then_perturb(img, {}, wp), blur_then_perturb(img, {}, wp));
}

TEST(AugmentPipelineTest, SerializesAndReplays) {
  WaveletPerturbConfig wp;
  wp.seed = 3;
  const auto pipeline = AugmentPipeline::blur_and_wavelet_perturbation({2.0}, wp);
  const auto j = to_json(pipeline);
  const auto back = pipeline_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.steps.size(), pipeline.steps.size());
  EXPECT_EQ(to_json(back), j);
  const Image img = random_image(32, 32, 3, 7);
  EXPECT_EQ(back.apply(img), blur_then_perturb(img, {2.0}, wp));
  AugmentPipeline bad;
  bad.steps.push_back({"mixup", {}});
  EXPECT_THROW(bad.apply(img), ArgumentError);
}

}  // namespace
}  // namespace scaleshift
