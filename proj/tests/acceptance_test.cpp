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
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "scaleshift/attribution.hpp"
#include "scaleshift/augment.hpp"
#include "scaleshift/harness.hpp"
#include "scaleshift/metrics.hpp"
#include "scaleshift/scattering.hpp"
#include "scaleshift/sensitivity.hpp"
#include "scaleshift/wavelet.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace scaleshift;
using testing::random_array;
using testing::random_image;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 1. Perfect reconstruction and energy preservation.
Outcome wavelet_round_trip() {
  const auto t0 = Clock::now();
  double worst_inf = 0.0, worst_energy = 0.0;
  std::uint64_t seed = 1000;
  for (const auto& f : {haar(), daubechies2()})
    for (std::size_t side : {32u, 64u, 128u})
      for (int i = 0; i < 100; ++i) {
        const Array2D x = random_array(side, side, seed++);
        const auto pyr = dwt_forward(x, f, 3);
        worst_inf = std::max(worst_inf, testing::max_abs_diff(dwt_inverse(pyr, f), x));
        worst_energy = std::max(worst_energy, std::abs(pyr.energy() / x.energy() - 1.0));
      }
  const double t = seconds_since(t0);
  return {worst_inf <= 1e-8 && worst_energy <= 1e-8 && t < 10.0,
          "max|x - idwt(dwt(x))|=" + fmt("%.2e", worst_inf) + " max energy rel err=" +
              fmt("%.2e", worst_energy) + " time=" + fmt("%.2fs", t)};
}

// 2. Jansen estimates against exhaustive enumeration.
Outcome sobol_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& fn : testing::analytic_mask_functions()) {
    const auto exact = testing::exhaustive_total_indices(fn.cells, fn.f);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto batch = generate_masks({fn.cells, 4096, "sobol", seed});
      const auto est = estimate_total_indices(batch, fn.f);
      for (std::size_t i = 0; i < fn.cells; ++i)
        worst = std::max(worst, std::abs(est.total_indices[i] - exact[i]));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 0.05 && t < 30.0, "max |S_T - exact|=" + fmt("%.4f", worst) + " time=" + fmt("%.2fs", t)};
}

// 3. A model reading a single subband is attributed to that subband.
Outcome wcam_recovery() {
  const auto t0 = Clock::now();
  const auto order = subband_order(3);
  int hits = 0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SubbandId planted = order[seed % order.size()];
    const Image img = random_image(32, 32, 3, 500 + seed, 0.3, 0.7);
    const auto pyr = dwt_forward(luminance(img), haar(), 3);
    const SubbandEnergyModel model(haar(), 3, planted, 2.0 * pyr.subband(planted).energy());
    WCAMConfig cfg;
    cfg.wavelet.levels = 3;
    cfg.wavelet.cells_per_side = 2;
    cfg.sample_count = 1024;
    cfg.seed = seed;
    const auto res = compute_wcam(model, img, cfg);
    const auto& e = res.scale_embedding.values;
    const std::size_t arg = static_cast<std::size_t>(std::max_element(e.begin(), e.end()) - e.begin());
    if (arg == subband_index(planted, 3)) {
      ++hits;
    } else {
      misses += " seed" + std::to_string(seed);
    }
  }
  const double t = seconds_since(t0);
  return {hits == 20 && t < 60.0,
          std::to_string(hits) + "/20 planted subbands recovered" + misses + " time=" + fmt("%.2fs", t)};
}

// 4. Feature count contract.
Outcome scattering_count() {
  bool ok = true;
  std::string detail;
  const Image img = random_image(64, 64, 1, 9);
  for (int m : {1, 2, 3})
    for (int j : {4, 8}) {
      ScatteringConfig cfg;
      cfg.depth = m;
      cfg.orientations = j;
      const std::size_t expected = static_cast<std::size_t>(m * j + m * m * j * (j - 1) / 2);
      const std::size_t got = scattering_forward(img, cfg).values.size();
      ok = ok && got == expected && cfg.feature_length() == expected;
      detail += " (" + std::to_string(m) + "," + std::to_string(j) + ")=" + std::to_string(got);
    }
  ScatteringConfig d2o8;
  d2o8.depth = 2;
  d2o8.orientations = 8;
  ok = ok && scattering_forward(img, d2o8).values.size() == 128;
  return {ok, "lengths" + detail};
}

// 5. Head gradient and separable training.
Outcome head_training() {
  Rng rng(3);
  std::vector<std::vector<double>> x(12, std::vector<double>(5));
  std::vector<int> y(12);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double& v : x[i]) v = standard_normal(rng);
    y[i] = static_cast<int>(i % 3 == 0);
  }
  std::vector<double> w(5);
  for (double& v : w) v = 0.5 * standard_normal(rng);
  const double b = 0.3, l2 = 1e-2, h = 1e-6;
  const auto g = logistic_gradient(w, b, x, y, l2);
  double worst = 0.0;
  for (std::size_t k = 0; k <= w.size(); ++k) {
    double fd;
    if (k < w.size()) {
      auto wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      fd = (logistic_loss(wp, b, x, y, l2) - logistic_loss(wm, b, x, y, l2)) / (2 * h);
    } else {
      fd = (logistic_loss(w, b + h, x, y, l2) - logistic_loss(w, b - h, x, y, l2)) / (2 * h);
    }
    worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-3}));
  }
  std::vector<std::vector<double>> sx;
  std::vector<int> sy;
  Rng toy(17);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double shift = label ? 1.5 : -1.5;
    sx.push_back({shift + 0.4 * standard_normal(toy), shift + 0.4 * standard_normal(toy)});
    sy.push_back(label);
  }
  const auto fit = fit_head(sx, sy);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < sx.size(); ++i) correct += (predict(fit.head, sx[i]) >= 0.5) == (sy[i] == 1);
  const double acc = static_cast<double>(correct) / static_cast<double>(sx.size());
  return {worst < 1e-4 && acc == 1.0,
          "max rel grad err=" + fmt("%.2e", worst) + " train accuracy=" + fmt("%.3f", acc) + " epochs=500"};
}

// 6. Augmentation exactness.
Outcome augmentation() {
  const Image img = random_image(64, 64, 3, 3, 0.4, 0.6);
  WaveletPerturbConfig cfg;
  cfg.cancel_fraction = 0.2;
  cfg.target_levels = {1};
  cfg.levels = 3;
  cfg.seed = 9;
  const Image out = wavelet_perturb(img, cfg);
  const auto before = dwt_image(img, haar(), 3), after = dwt_image(out, haar(), 3);
  const std::size_t n = 3 * 32 * 32;
  const auto expected = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n)));
  bool ok = true;
  double worst_untouched = 0.0;
  std::string counts;
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t zeroed = 0;
    for (const auto id : subband_order(3)) {
      const auto& a = before[c].subband(id);
      const auto& z = after[c].subband(id);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(z.values()[i] - a.values()[i]);
        if (id.level == 1 && id.band != Band::approximation) {
          if (d > 1e-8) {
            ++zeroed;
            ok = ok && std::abs(z.values()[i]) <= 1e-8;
          }
        } else {
          worst_untouched = std::max(worst_untouched, d);
        }
      }
    }
    ok = ok && zeroed == expected;
    counts += " " + std::to_string(zeroed);
  }
  ok = ok && worst_untouched <= 1e-8;
  Image board(64, 64, 1);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) board(y, x) = (x + y) % 2 ? 1.0 : 0.0;
  auto finest = [](const Image& im) {
    const auto p = dwt_forward(im.channel(0), haar(), 1);
    return p.detail(1, Band::horizontal).energy() + p.detail(1, Band::vertical).energy() +
           p.detail(1, Band::diagonal).energy();
  };
  const double reduction = 1.0 - finest(gaussian_blur(board, {2.0})) / finest(board);
  ok = ok && reduction > 0.9;
  return {ok, "zeroed per channel:" + counts + " (expected " + std::to_string(expected) +
                  ") max non-target change=" + fmt("%.1e", worst_untouched) +
                  " checkerboard finest-energy reduction=" + fmt("%.4f", reduction)};
}

// 7. Stored predictions replayed through rates_and_f1.
Outcome metrics_replay() {
  const auto counts = replay_counts(
      read_prediction_log(fs::path(SCALESHIFT_SOURCE_DIR) / "tests/fixtures/table1_predictions.csv"));
  struct Row {
    const char* split;
    double f1, tpr, tnr, fpr, fnr;
  };
  const Row rows[] = {{"google_baseline", 0.98, 0.99, 0.98, 0.02, 0.01},
                      {"google_10cm", 0.89, 0.81, 1.00, 0.00, 0.19},
                      {"google_ood", 0.98, 0.99, 0.98, 0.02, 0.01},
                      {"ign", 0.46, 0.32, 0.95, 0.05, 0.68}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const auto r = rates_and_f1(counts.at(row.split));
    ok = ok && round2(*r.f1) == row.f1 && round2(*r.tpr) == row.tpr && round2(*r.tnr) == row.tnr &&
         round2(*r.fpr) == row.fpr && round2(*r.fnr) == row.fnr;
    detail += std::string(" ") + row.split + " F1=" + fmt("%.4f", *r.f1) + " TPR=" + fmt("%.2f", *r.tpr) +
              " FNR=" + fmt("%.2f", *r.fnr) + ";";
  }
  return {ok, detail};
}

// 8. Progressively blurred targets under a fine-scale model.
Outcome pipeline_sanity() {
  std::map<std::string, Image> images;
  std::string body = "id,image_path,label,provider,gsd_cm_per_px,region_tag,pair_id\n";
  for (int i = 0; i < 12; ++i) {
    const std::string s = "s" + std::to_string(10 + i), t = "t" + std::to_string(10 + i);
    const std::string pid = "p" + std::to_string(10 + i);
    body += s + ",s.png,pv,google,10,n," + pid + "\n" + t + ",t.png,pv,ign,10,n," + pid + "\n";
    Image img = random_image(64, 64, 3, 70 + static_cast<std::uint64_t>(i), 0.2, 0.4);
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 64; ++x)
        for (std::size_t c = 0; c < 3; ++c) img(y, x, c) += (x + y) % 2 ? 0.3 : 0.0;
    images[s] = img;
    images[t] = gaussian_blur(img, BlurConfig{0.2 + 0.08 * i});
  }
  std::istringstream in(body);
  const auto manifest = parse_manifest(in, ".", false);
  // Blur range kept inside the model's unsaturated response.
  const DetailEnergyModel model(1, 3, 0.5, 4.0);
  const auto res = paired_shift_run(model, manifest, Provider::google, 3, 1,
                                    [&](const ManifestRecord& r) { return images.at(r.id); });
  if (!res.analysis || !res.analysis->ssim_vs_delta.r || !res.analysis->euclid_vs_delta.r)
    return {false, "correlations undefined"};
  const double rs = *res.analysis->ssim_vs_delta.r, re = *res.analysis->euclid_vs_delta.r;
  return {rs < -0.9 && re > 0.9, "n=" + std::to_string(res.analysis->n) + " r(SSIM,dp)=" +
                                     fmt("%.4f", rs) + " r(Euclid,dp)=" + fmt("%.4f", re)};
}

// 9. The CLI benchmark on the bundled toy dataset, twice.
Outcome end_to_end() {
  const fs::path root = fs::temp_directory_path() / "scaleshift_acceptance";
  fs::remove_all(root);
  const fs::path config = fs::path(SCALESHIFT_SOURCE_DIR) / "data/toy/config.json";
  double worst = 0.0;
  for (const char* run : {"a", "b"}) {
    const auto t0 = Clock::now();
    const std::string cmd = std::string(SCALESHIFT_CLI) + " bench run " + config.string() + " --out " +
                            (root / run).string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    worst = std::max(worst, seconds_since(t0));
    if (status != 0) return {false, std::string("bench run exited with status ") + std::to_string(status)};
  }
  const auto report = nlohmann::json::parse(slurp(root / "a" / "report.json"));
  bool ok = report["splits"].size() == 4;
  for (const auto& s : report["splits"]) ok = ok && s["n"].get<std::size_t>() > 0;
  ok = ok && fs::exists(root / "a" / "predictions.csv");
  std::size_t heatmaps = 0, identical = 0, compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    if (rel.extension() == ".png" && rel.parent_path() == "heatmaps") ++heatmaps;
    ++compared;
    identical += slurp(e.path()) == slurp(root / "b" / rel);
  }
  ok = ok && heatmaps >= 2 && identical == compared && worst < 60.0;
  return {ok, "splits=" + std::to_string(report["splits"].size()) + " heatmap files=" +
                  std::to_string(heatmaps) + " identical files=" + std::to_string(identical) + "/" +
                  std::to_string(compared) + " slowest run=" + fmt("%.2fs", worst)};
}

// 10. SSIM and Pearson bounds.
Outcome unit_bounds() {
  double worst_ssim = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Array2D a = random_array(32, 32, s);
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, a) - 1.0));
  }
  Rng rng(8);
  double worst_affine = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(30), ys(30), xs2(30);
    for (std::size_t i = 0; i < 30; ++i) {
      xs[i] = uniform01(rng);
      ys[i] = 0.5 * xs[i] + uniform01(rng);
      xs2[i] = 3.7 * xs[i] + 12.0;
    }
    worst_affine = std::max(worst_affine, std::abs(*pearson(xs2, ys).r - *pearson(xs, ys).r));
  }
  std::vector<double> lx, ly;
  for (int i = 0; i < 20; ++i) {
    lx.push_back(0.37 * i + 1.0);
    ly.push_back(-2.0 + 1.5 * (0.37 * i + 1.0));
  }
  const auto exact = pearson(lx, ly);
  const bool ok = worst_ssim <= 1e-12 && worst_affine <= 1e-12 && exact.p_value && *exact.p_value < 1e-8;
  return {ok, "max|SSIM(x,x)-1|=" + fmt("%.1e", worst_ssim) + " max affine r change=" +
                  fmt("%.1e", worst_affine) + " p(r=1)=" + fmt("%.1e", exact.p_value.value_or(1.0))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"wavelet round-trip", wavelet_round_trip},
      {"sobol oracle equivalence", sobol_oracle},
      {"wcam subband recovery", wcam_recovery},
      {"scattering count contract", scattering_count},
      {"head training", head_training},
      {"augmentation exactness", augmentation},
      {"metrics replay", metrics_replay},
      {"paired shift pipeline sanity", pipeline_sanity},
      {"end-to-end benchmark", end_to_end},
      {"ssim/pearson unit bounds", unit_bounds},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] criterion %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
