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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scaleshift/attribution.hpp"
#include "scaleshift/augment.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/harness.hpp"
#include "scaleshift/metrics.hpp"
#include "scaleshift/png_io.hpp"
#include "scaleshift/render.hpp"
#include "scaleshift/scattering.hpp"
#include "scaleshift/toy.hpp"

namespace fs = std::filesystem;
using namespace scaleshift;

namespace {

// Runs `fn`, converting failures into a stage-tagged exit code.
template <typename Fn>
int guarded(const std::string& stage, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return stage_exit_code(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "error: [" << stage << "] " << e.what() << '\n';
    return stage_exit_code(stage);
  }
}

struct BenchArgs {
  std::string config;
  std::string out;
  std::size_t threads = 0;
  std::string toy_dir;
  std::uint64_t toy_seed = 2024;
};

struct WcamArgs {
  std::string image;
  std::string model;
  std::uint64_t seed = 0;
  int levels = 3;
  std::size_t grid = 4;
  std::size_t samples = kDefaultSampleCount;
  std::string filter = "haar";
  std::size_t threads = 1;
  std::string out = ".";
};

struct AugmentArgs {
  std::string image;
  double blur_sigma = 2.0;
  double wp_fraction = 0.2;
  std::vector<int> wp_levels{1};
  std::uint64_t seed = 0;
  std::string out;
};

struct ScatterArgs {
  std::string manifest;
  std::string provider;
  double gsd = 0.0;
  int depth = 2;
  int orientations = 8;
  std::size_t input_size = 64;
  std::size_t pooling = 1;
  int epochs = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::string out;
  std::string head;
  std::vector<std::string> images;
};

struct ReplayArgs {
  std::string log;
  double threshold = 0.5;
};

void bench_run(const BenchArgs& a) {
  RunOptions opts;
  if (!a.out.empty()) opts.output_dir = a.out;
  if (a.threads > 0) opts.threads = a.threads;
  const EvalReport r = run_benchmark(a.config, opts);
  std::cout << kRatesCsvHeader << '\n';
  for (const auto& s : r.splits) std::cout << rates_csv_row(s.name, s.counts) << '\n';
  if (r.paired && r.paired->analysis)
    std::cout << "pairs=" << r.paired->pairs.size()
              << " r(ssim,dp)=" << format_stat(r.paired->analysis->ssim_vs_delta.r)
              << " r(euclid,dp)=" << format_stat(r.paired->analysis->euclid_vs_delta.r) << '\n';
}

void wcam_explain(const WcamArgs& a) {
  const Image img = read_png(a.image);
  const auto model = load_model(read_json_file(a.model), fs::path(a.model).parent_path());
  WCAMConfig cfg;
  cfg.wavelet.filter = filter_by_name(a.filter);
  cfg.wavelet.levels = a.levels;
  cfg.wavelet.cells_per_side = a.grid;
  cfg.sample_count = a.samples;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  const WCAMResult res = compute_wcam(*model, img, cfg);
  fs::create_directories(a.out);
  const std::string stem = fs::path(a.image).stem().string();
  const auto files = render_heatmaps(res, img, a.out, stem);
  std::ofstream(fs::path(a.out) / (stem + "_wcam.json"), std::ios::trunc) << to_json(res).dump(2) << '\n';
  std::cout << "p=" << format_probability(model->predict(img)) << " degenerate=" << files.degenerate
            << "\n";
  const auto order = subband_order(res.grid.levels());
  for (std::size_t i = 0; i < order.size(); ++i)
    std::cout << band_name(order[i].band) << '@' << order[i].level << ' '
              << res.scale_embedding.values[i] << '\n';
}

void augment_apply(const AugmentArgs& a) {
  WaveletPerturbConfig wp;
  wp.cancel_fraction = a.wp_fraction;
  wp.target_levels = a.wp_levels;
  wp.seed = a.seed;
  const Image out = blur_then_perturb(read_png(a.image), BlurConfig{a.blur_sigma}, wp);
  const std::string dest =
      a.out.empty() ? (fs::path(a.image).stem().string() + "_augmented.png") : a.out;
  write_png(dest, out);
  std::cout << dest << '\n';
}

void scatter_fit(const ScatterArgs& a) {
  const DatasetManifest m = load_manifest(a.manifest);
  ScatteringConfig cfg;
  cfg.depth = a.depth;
  cfg.orientations = a.orientations;
  cfg.input_size = a.input_size;
  cfg.pooling = a.pooling;
  const ScatteringNetwork net(cfg);
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (const auto& r : m.records) {
    if (!a.provider.empty() && provider_name(r.provider) != a.provider) continue;
    Image img = read_png(r.resolved_path);
    if (a.gsd > 0.0) img = resample_gsd(img, r.gsd_cm_per_px, a.gsd);
    features.push_back(net.forward(img).values);
    labels.push_back(r.positive ? 1 : 0);
  }
  HeadParams hp;
  hp.epochs = a.epochs;
  hp.learning_rate = a.learning_rate;
  hp.l2 = a.l2;
  const FitResult fit = fit_head(features, labels, hp);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    correct += (predict(fit.head, features[i]) >= 0.5) == (labels[i] == 1);
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + a.out + "'");
  out << head_to_json(fit.head, cfg).dump(2) << '\n';
  std::cout << "examples=" << features.size() << " features=" << cfg.feature_length()
            << " loss=" << fit.loss_history.back() << " train_accuracy="
            << static_cast<double>(correct) / static_cast<double>(features.size()) << '\n';
}

void scatter_predict(const ScatterArgs& a) {
  ScatteringConfig cfg;
  const LinearHead head = head_from_json(read_json_file(a.head), &cfg);
  const ScatteringModel model(cfg, head);
  for (const auto& path : a.images)
    std::cout << path << ',' << format_probability(model.predict(read_png(path))) << '\n';
}

void metrics_replay(const ReplayArgs& a) {
  const auto counts = replay_counts(read_prediction_log(fs::path(a.log)), a.threshold);
  std::cout << kRatesCsvHeader << '\n';
  for (const auto& [name, c] : counts) std::cout << rates_csv_row(name, c) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scaleshift: space-scale explanations and distribution-shift benchmarks"};
  app.require_subcommand(1);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark runner");
  bench_cmd->require_subcommand(1);
  auto* bench_run_cmd = bench_cmd->add_subcommand("run", "Run the four-split benchmark");
  bench_run_cmd->add_option("config", bench.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  bench_run_cmd->add_option("--out", bench.out, "Output directory (overrides the config)");
  bench_run_cmd->add_option("--threads", bench.threads, "Worker threads (0: config value)");
  auto* bench_toy_cmd = bench_cmd->add_subcommand("toy", "Write the synthetic toy dataset");
  bench_toy_cmd->add_option("dir", bench.toy_dir, "Destination directory")->required();
  bench_toy_cmd->add_option("--seed", bench.toy_seed, "Generator seed");

  WcamArgs wcam;
  auto* wcam_cmd = app.add_subcommand("wcam", "Wavelet attribution");
  wcam_cmd->require_subcommand(1);
  auto* explain = wcam_cmd->add_subcommand("explain", "Explain one prediction");
  explain->add_option("image", wcam.image, "Input PNG")->required()->check(CLI::ExistingFile);
  explain->add_option("--model", wcam.model, "Model description (JSON)")->required()->check(CLI::ExistingFile);
  explain->add_option("--seed", wcam.seed, "Mask sequence seed");
  explain->add_option("--levels", wcam.levels, "Decomposition levels");
  explain->add_option("--grid", wcam.grid, "Cells per subband side");
  explain->add_option("--samples", wcam.samples, "Base sample count N");
  explain->add_option("--filter", wcam.filter, "haar or db2");
  explain->add_option("--threads", wcam.threads, "Worker threads");
  explain->add_option("--out", wcam.out, "Output directory");

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Scale-targeted augmentation");
  aug_cmd->require_subcommand(1);
  auto* apply = aug_cmd->add_subcommand("apply", "Blur then wavelet-perturb one image");
  apply->add_option("image", aug.image, "Input PNG")->required()->check(CLI::ExistingFile);
  apply->add_option("--blur-sigma", aug.blur_sigma, "Gaussian sigma in pixels");
  apply->add_option("--wp-fraction", aug.wp_fraction, "Fraction of target coefficients zeroed");
  apply->add_option("--wp-levels", aug.wp_levels, "Target levels (1 is finest)");
  apply->add_option("--seed", aug.seed, "Perturbation seed");
  apply->add_option("--out", aug.out, "Output PNG");

  ScatterArgs sc;
  auto* sc_cmd = app.add_subcommand("scatter", "Scattering classifier");
  sc_cmd->require_subcommand(1);
  auto* fit = sc_cmd->add_subcommand("fit", "Train a linear head on a manifest");
  fit->add_option("manifest", sc.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", sc.out, "Head file to write")->required();
  fit->add_option("--provider", sc.provider, "Only use records from this provider");
  fit->add_option("--gsd", sc.gsd, "Resample every record to this GSD first");
  fit->add_option("--depth", sc.depth, "Octaves m");
  fit->add_option("--orientations", sc.orientations, "Orientations J");
  fit->add_option("--input-size", sc.input_size, "Side the image is reduced to");
  fit->add_option("--pooling", sc.pooling, "Pooling grid side");
  fit->add_option("--epochs", sc.epochs, "Gradient steps");
  fit->add_option("--lr", sc.learning_rate, "Learning rate");
  fit->add_option("--l2", sc.l2, "L2 weight");
  auto* pred = sc_cmd->add_subcommand("predict", "Score images with a trained head");
  pred->add_option("head", sc.head, "Head file")->required()->check(CLI::ExistingFile);
  pred->add_option("images", sc.images, "PNG files")->required()->check(CLI::ExistingFile);

  ReplayArgs rp;
  auto* m_cmd = app.add_subcommand("metrics", "Metric utilities");
  m_cmd->require_subcommand(1);
  auto* replay = m_cmd->add_subcommand("replay", "Recompute rates from a prediction log");
  replay->add_option("log", rp.log, "predictions.csv")->required()->check(CLI::ExistingFile);
  replay->add_option("--threshold", rp.threshold, "Decision threshold");

  CLI11_PARSE(app, argc, argv);

  if (bench_run_cmd->parsed()) return guarded("config", [&] { bench_run(bench); });
  if (bench_toy_cmd->parsed())
    return guarded("report", [&] { toy::generate_dataset(bench.toy_dir, bench.toy_seed); });
  if (explain->parsed()) return guarded("wcam", [&] { wcam_explain(wcam); });
  if (apply->parsed()) return guarded("augment", [&] { augment_apply(aug); });
  if (fit->parsed()) return guarded("scatter", [&] { scatter_fit(sc); });
  if (pred->parsed()) return guarded("scatter", [&] { scatter_predict(sc); });
  if (replay->parsed()) return guarded("metrics", [&] { metrics_replay(rp); });
  return 1;
}
