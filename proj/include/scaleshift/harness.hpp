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
#ifndef SCALESHIFT_HARNESS_HPP_
#define SCALESHIFT_HARNESS_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scaleshift/attribution.hpp"
#include "scaleshift/augment.hpp"
#include "scaleshift/error.hpp"
#include "scaleshift/image.hpp"
#include "scaleshift/metrics.hpp"
#include "scaleshift/model.hpp"
#include "scaleshift/parallel.hpp"
#include "scaleshift/png_io.hpp"
#include "scaleshift/render.hpp"
#include "scaleshift/scattering.hpp"
#include "scaleshift/wavelet.hpp"

namespace scaleshift {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset manifest

enum class Provider { google, ign, other };

inline std::string provider_name(Provider p) {
  switch (p) {
    case Provider::google: return "google";
    case Provider::ign: return "ign";
    case Provider::other: return "other";
  }
  return "other";
}

inline std::optional<Provider> parse_provider(std::string_view s) {
  if (s == "google") return Provider::google;
  if (s == "ign") return Provider::ign;
  if (s == "other") return Provider::other;
  return std::nullopt;
}

struct ManifestRecord {
  std::string id;
  std::string image_path;  // as written in the manifest
  fs::path resolved_path;  // relative entries are resolved against the manifest directory
  bool positive = false;
  Provider provider = Provider::other;
  double gsd_cm_per_px = 0.0;
  std::string region_tag;
  std::string pair_id;  // empty when unpaired
};

struct RecordPair {
  std::string pair_id;
  std::size_t first = 0;  // indices into DatasetManifest::records, ordered by id
  std::size_t second = 0;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;  // sorted by id
  std::vector<RecordPair> pairs;        // sorted by pair_id

  std::size_t index_of(const std::string& id) const {
    const auto it = std::lower_bound(records.begin(), records.end(), id,
                                     [](const ManifestRecord& r, const std::string& k) { return r.id < k; });
    if (it == records.end() || it->id != id) throw ArgumentError("manifest: no record with id '" + id + "'");
    return static_cast<std::size_t>(it - records.begin());
  }
  std::size_t unpaired_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) { return r.pair_id.empty(); }));
  }
};

inline constexpr const char* kManifestHeader =
    "id,image_path,label,provider,gsd_cm_per_px,region_tag,pair_id";

namespace detail {

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// Parses manifest text. Rows are numbered from 1 after the header. When
// `check_files` is set, every image path must exist; all missing entries are
// reported together.
inline DatasetManifest parse_manifest(std::istream& in, const fs::path& base_dir,
                                      bool check_files = true) {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("manifest: missing header");
  detail::strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kManifestHeader)
    throw ArgumentError(std::string("manifest: header must be '") + kManifestHeader + "'");

  DatasetManifest m;
  std::set<std::string> ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    auto fail = [row](const std::string& field, const std::string& msg) {
      return ArgumentError("manifest row " + std::to_string(row) + ", field '" + field + "': " + msg);
    };
    if (f.size() != 7)
      throw fail("*", "expected 7 fields, found " + std::to_string(f.size()));
    ManifestRecord r;
    r.id = f[0];
    if (r.id.empty()) throw fail("id", "empty");
    if (!ids.insert(r.id).second) throw fail("id", "duplicate id '" + r.id + "'");
    r.image_path = f[1];
    if (r.image_path.empty()) throw fail("image_path", "empty");
    r.resolved_path = fs::path(r.image_path).is_absolute() ? fs::path(r.image_path)
                                                           : base_dir / r.image_path;
    if (f[2] == "pv") {
      r.positive = true;
    } else if (f[2] != "no_pv") {
      throw fail("label", "expected 'pv' or 'no_pv', got '" + f[2] + "'");
    }
    const auto provider = parse_provider(f[3]);
    if (!provider) throw fail("provider", "expected google, ign or other, got '" + f[3] + "'");
    r.provider = *provider;
    const auto gsd = detail::parse_double(f[4]);
    if (!gsd || !std::isfinite(*gsd) || *gsd <= 0.0)
      throw fail("gsd_cm_per_px", "must be a positive number, got '" + f[4] + "'");
    r.gsd_cm_per_px = *gsd;
    r.region_tag = f[5];
    r.pair_id = f[6];
    m.records.push_back(std::move(r));
  }
  std::sort(m.records.begin(), m.records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.id < b.id; });

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (!m.records[i].pair_id.empty()) groups[m.records[i].pair_id].push_back(i);
  for (const auto& [pid, members] : groups) {
    if (members.size() == 1)
      throw ArgumentError("manifest: dangling pair_id '" + pid + "' (record '" +
                          m.records[members[0]].id + "' has no partner)");
    if (members.size() > 2)
      throw ArgumentError("manifest: pair_id '" + pid + "' links " + std::to_string(members.size()) +
                          " records; a pair has exactly two");
    if (m.records[members[0]].provider == m.records[members[1]].provider)
      throw ArgumentError("manifest: pair_id '" + pid + "' links two records from provider '" +
                          provider_name(m.records[members[0]].provider) + "'");
    m.pairs.push_back({pid, members[0], members[1]});
  }

  if (check_files) {
    std::vector<std::string> missing;
    for (const auto& r : m.records)
      if (!fs::is_regular_file(r.resolved_path)) missing.push_back(r.id + " -> " + r.image_path);
    if (!missing.empty()) {
      std::string msg = "manifest: " + std::to_string(missing.size()) + " image file(s) not found:";
      for (const auto& s : missing) msg += "\n  " + s;
      throw IoError(msg);
    }
  }
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path, bool check_files = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.parent_path(), check_files);
}

// Brings an image from `from_gsd` to the coarser `to_gsd` by area averaging.
// Output sides are round(side * from / to).
inline Image resample_gsd(const Image& image, double from_gsd, double to_gsd) {
  if (!(from_gsd > 0.0) || !(to_gsd > 0.0)) throw ArgumentError("resample_gsd: GSD must be positive");
  if (to_gsd < from_gsd) throw UnsupportedError("resample_gsd: upsampling is not supported");
  if (to_gsd == from_gsd) return image;
  const double f = from_gsd / to_gsd;
  const auto h = static_cast<std::size_t>(std::lround(static_cast<double>(image.height()) * f));
  const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(image.width()) * f));
  if (h == 0 || w == 0) throw DimensionError("resample_gsd: output would be empty");
  return area_resize(image, h, w);
}

// ---------------------------------------------------------------------------
// Splits

inline constexpr std::array<std::string_view, 4> kSplitNames = {"baseline", "gsd_shift",
                                                                "geo_shift", "provider_shift"};

// Record selector for one evaluation split. Unset fields match everything.
struct SplitSpec {
  std::string name;
  std::optional<Provider> provider;
  std::optional<std::string> region;
  std::optional<bool> paired;
  std::optional<double> resample_to;

  bool matches(const ManifestRecord& r) const {
    if (provider && r.provider != *provider) return false;
    if (region && r.region_tag != *region) return false;
    if (paired && r.pair_id.empty() == *paired) return false;
    return true;
  }

  std::vector<std::size_t> select(const DatasetManifest& m) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.records.size(); ++i)
      if (matches(m.records[i])) out.push_back(i);
    return out;
  }
};

inline nlohmann::json to_json(const SplitSpec& s) {
  nlohmann::json j = nlohmann::json::object();
  if (s.provider) j["provider"] = provider_name(*s.provider);
  if (s.region) j["region"] = *s.region;
  if (s.paired) j["paired"] = *s.paired;
  if (s.resample_to) j["resample_to"] = *s.resample_to;
  return j;
}

inline SplitSpec split_from_json(const std::string& name, const nlohmann::json& j) {
  SplitSpec s;
  s.name = name;
  for (const auto& [key, value] : j.items()) {
    if (key == "provider") {
      const auto p = parse_provider(value.get<std::string>());
      if (!p) throw ArgumentError("split '" + name + "': unknown provider");
      s.provider = *p;
    } else if (key == "region") {
      s.region = value.get<std::string>();
    } else if (key == "paired") {
      s.paired = value.get<bool>();
    } else if (key == "resample_to") {
      s.resample_to = value.get<double>();
      if (!(*s.resample_to > 0.0)) throw ArgumentError("split '" + name + "': resample_to must be positive");
    } else {
      throw ArgumentError("split '" + name + "': unknown key '" + key + "'");
    }
  }
  return s;
}

// The four named splits, in canonical order.
inline std::vector<SplitSpec> splits_from_json(const nlohmann::json& j) {
  std::vector<SplitSpec> out;
  for (std::string_view name : kSplitNames) {
    const std::string n(name);
    if (!j.contains(n)) throw ArgumentError("splits: missing '" + n + "'");
    out.push_back(split_from_json(n, j.at(n)));
  }
  for (const auto& [key, value] : j.items())
    if (std::find(kSplitNames.begin(), kSplitNames.end(), key) == kSplitNames.end())
      throw ArgumentError("splits: unknown split '" + key + "'");
  return out;
}

// Every split must select at least one record and no record may fall in two.
inline void check_splits(const std::vector<SplitSpec>& splits, const DatasetManifest& m) {
  std::map<std::size_t, std::string> owner;
  for (const auto& s : splits) {
    const auto idx = s.select(m);
    if (idx.empty()) throw ArgumentError("split '" + s.name + "' selects no records");
    for (std::size_t i : idx) {
      const auto [it, inserted] = owner.emplace(i, s.name);
      if (!inserted)
        throw ArgumentError("record '" + m.records[i].id + "' belongs to splits '" + it->second +
                            "' and '" + s.name + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Model adapters

inline nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// Builds a model from its JSON description. Relative file references are
// resolved against `base_dir`. A label_oracle model starts empty; the caller
// registers images through its side channel.
inline std::unique_ptr<BlackBoxModel> make_model(const nlohmann::json& spec, const fs::path& base_dir) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "constant") return std::make_unique<ConstantModel>(spec.at("p").get<double>());
  if (kind == "detail_energy")
    return std::make_unique<DetailEnergyModel>(spec.value("level", 1), spec.value("levels", 3),
                                               spec.at("center").get<double>(),
                                               spec.at("gain").get<double>());
  if (kind == "subband_energy") {
    const std::string band = spec.at("band").get<std::string>();
    Band b = Band::approximation;
    if (band == "horizontal") b = Band::horizontal;
    else if (band == "vertical") b = Band::vertical;
    else if (band == "diagonal") b = Band::diagonal;
    else if (band != "approximation") throw ArgumentError("subband_energy: unknown band '" + band + "'");
    const int levels = spec.value("levels", 3);
    const int level = b == Band::approximation ? levels : spec.at("level").get<int>();
    return std::make_unique<SubbandEnergyModel>(filter_by_name(spec.value("filter", std::string("haar"))),
                                                levels, SubbandId{level, b},
                                                spec.at("scale").get<double>());
  }
  if (kind == "label_oracle") return std::make_unique<LabelOracleModel>();
  if (kind == "scattering") {
    fs::path head_path = spec.at("head").get<std::string>();
    if (head_path.is_relative()) head_path = base_dir / head_path;
    ScatteringConfig cfg;
    LinearHead head = head_from_json(read_json_file(head_path), &cfg);
    return std::make_unique<ScatteringModel>(cfg, std::move(head));
  }
  throw ArgumentError("unknown model kind '" + kind + "'");
}

// Accepts either an inline model object or {"path": file}.
inline std::unique_ptr<BlackBoxModel> load_model(const nlohmann::json& entry, const fs::path& base_dir) {
  if (entry.contains("path")) {
    fs::path p = entry.at("path").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return make_model(read_json_file(p), p.parent_path());
  }
  return make_model(entry, base_dir);
}

// ---------------------------------------------------------------------------
// Split evaluation

using ImageLoader = std::function<Image(const ManifestRecord&)>;

inline Image load_record_image(const ManifestRecord& r) { return read_png(r.resolved_path); }

inline Image prepare_image(const ManifestRecord& r, const SplitSpec& split, const ImageLoader& loader) {
  Image img = loader(r);
  if (split.resample_to) img = resample_gsd(img, r.gsd_cm_per_px, *split.resample_to);
  return img;
}

struct PredictionRecord {
  std::string split;
  std::string id;
  bool label = false;
  std::optional<double> probability;  // empty when the model failed
  std::string error;
};

inline bool predicted_positive(double probability, double threshold) { return probability >= threshold; }

struct SplitResult {
  std::string name;
  ConfusionCounts counts;
  std::size_t skipped = 0;
  std::vector<PredictionRecord> predictions;  // ordered by record id
};

inline constexpr double kMaxSkipFraction = 0.05;

inline SplitResult evaluate_split(const BlackBoxModel& model, const DatasetManifest& manifest,
                                  const SplitSpec& split, double threshold = 0.5,
                                  std::size_t threads = 1,
                                  const ImageLoader& loader = load_record_image) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must be in [0, 1]");
  const auto idx = split.select(manifest);
  if (idx.empty()) throw ArgumentError("split '" + split.name + "' selects no records");
  SplitResult res;
  res.name = split.name;
  res.predictions.resize(idx.size());
  parallel_for(idx.size(), model.thread_safe() ? threads : 1, [&](std::size_t k) {
    const ManifestRecord& r = manifest.records[idx[k]];
    PredictionRecord& out = res.predictions[k];
    out.split = split.name;
    out.id = r.id;
    out.label = r.positive;
    const Image img = prepare_image(r, split, loader);
    try {
      const double p = model.predict(img);
      if (!(p >= 0.0 && p <= 1.0)) throw ModelError("probability outside [0, 1]");
      out.probability = p;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  for (const auto& p : res.predictions) {
    if (!p.probability) {
      ++res.skipped;
      continue;
    }
    res.counts.add(p.label, predicted_positive(*p.probability, threshold));
  }
  if (static_cast<double>(res.skipped) > kMaxSkipFraction * static_cast<double>(idx.size()))
    throw StageError("evaluate", "split '" + split.name + "': model failed on " +
                                     std::to_string(res.skipped) + " of " +
                                     std::to_string(idx.size()) + " images");
  return res;
}

// ---------------------------------------------------------------------------
// Prediction log

inline constexpr const char* kPredictionLogHeader = "split,id,label,probability,status";

inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

inline void write_prediction_log(std::ostream& out, const std::vector<SplitResult>& splits) {
  out << kPredictionLogHeader << '\n';
  for (const auto& s : splits)
    for (const auto& p : s.predictions)
      out << p.split << ',' << p.id << ',' << (p.label ? "pv" : "no_pv") << ','
          << (p.probability ? format_probability(*p.probability) : "") << ','
          << (p.probability ? "ok" : "skipped") << '\n';
}

inline std::vector<PredictionRecord> read_prediction_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("prediction log: missing header");
  detail::strip_cr(line);
  if (line != kPredictionLogHeader)
    throw ArgumentError(std::string("prediction log: header must be '") + kPredictionLogHeader + "'");
  std::vector<PredictionRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    const std::string where = "prediction log row " + std::to_string(row);
    if (f.size() != 5) throw ArgumentError(where + ": expected 5 fields");
    PredictionRecord p;
    p.split = f[0];
    p.id = f[1];
    if (f[2] != "pv" && f[2] != "no_pv") throw ArgumentError(where + ", field 'label': bad value");
    p.label = f[2] == "pv";
    if (f[4] == "ok") {
      const auto v = detail::parse_double(f[3]);
      if (!v || !(*v >= 0.0 && *v <= 1.0)) throw ArgumentError(where + ", field 'probability': bad value");
      p.probability = *v;
    } else if (f[4] != "skipped") {
      throw ArgumentError(where + ", field 'status': expected ok or skipped");
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PredictionRecord> read_prediction_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prediction log '" + path.string() + "'");
  return read_prediction_log(in);
}

// Recomputes per-split counts from logged probabilities.
inline std::map<std::string, ConfusionCounts> replay_counts(const std::vector<PredictionRecord>& log,
                                                            double threshold = 0.5) {
  std::map<std::string, ConfusionCounts> out;
  for (const auto& p : log) {
    auto& c = out[p.split];
    if (p.probability) c.add(p.label, predicted_positive(*p.probability, threshold));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paired provider shift

struct LowScaleSimilarity {
  double ssim = 0.0;
  double euclid = 0.0;
};

// SSIM and Euclidean distance between the level-`levels` Haar approximations
// of the two luminance planes. Approximation values span [0, 2^levels].
inline LowScaleSimilarity low_scale_similarity(const Image& a, const Image& b, int levels = 3) {
  const auto pa = dwt_forward(luminance(a), haar(), levels);
  const auto pb = dwt_forward(luminance(b), haar(), levels);
  SsimParams params;
  params.dynamic_range = std::ldexp(1.0, levels);
  return {ssim(pa.approximation(), pb.approximation(), params),
          euclidean_distance(pa.approximation(), pb.approximation())};
}

struct PairOutcome {
  std::string pair_id;
  std::string source_id;
  std::string target_id;
  double gsd = 0.0;  // common GSD both images were brought to
  double p_source = 0.0;
  double p_target = 0.0;
  double delta_p = 0.0;
  double ssim = 0.0;
  double euclid = 0.0;
};

struct PairedShiftResult {
  std::vector<PairOutcome> pairs;  // ordered by pair_id
  std::optional<ShiftAnalysis> analysis;  // needs at least 3 valid pairs
  std::size_t unpaired = 0;
  std::size_t skipped = 0;  // pairs without a source-provider member or a failed prediction
};

// Both members of a pair at their common (coarser) GSD.
inline std::pair<Image, Image> load_pair(const ManifestRecord& source, const ManifestRecord& target,
                                         const ImageLoader& loader) {
  const double gsd = std::max(source.gsd_cm_per_px, target.gsd_cm_per_px);
  Image s = resample_gsd(loader(source), source.gsd_cm_per_px, gsd);
  Image t = resample_gsd(loader(target), target.gsd_cm_per_px, gsd);
  if (s.height() != t.height() || s.width() != t.width())
    throw DimensionError("pair '" + source.pair_id + "': images differ in size at " +
                         std::to_string(gsd) + " cm/px");
  return {std::move(s), std::move(t)};
}

inline PairedShiftResult paired_shift_run(const BlackBoxModel& model, const DatasetManifest& manifest,
                                          Provider source = Provider::google, int levels = 3,
                                          std::size_t threads = 1,
                                          const ImageLoader& loader = load_record_image) {
  PairedShiftResult res;
  res.unpaired = manifest.unpaired_count();
  std::vector<std::optional<PairOutcome>> slots(manifest.pairs.size());
  parallel_for(manifest.pairs.size(), model.thread_safe() ? threads : 1, [&](std::size_t k) {
    const auto& pr = manifest.pairs[k];
    const ManifestRecord* s = &manifest.records[pr.first];
    const ManifestRecord* t = &manifest.records[pr.second];
    if (t->provider == source) std::swap(s, t);
    if (s->provider != source) return;
    const auto [a, b] = load_pair(*s, *t, loader);
    PairOutcome o;
    o.pair_id = pr.pair_id;
    o.source_id = s->id;
    o.target_id = t->id;
    o.gsd = std::max(s->gsd_cm_per_px, t->gsd_cm_per_px);
    try {
      o.p_source = model.predict(a);
      o.p_target = model.predict(b);
    } catch (const std::exception&) {
      return;
    }
    o.delta_p = ProbabilityShift::of(o.p_source, o.p_target).delta;
    const auto sim = low_scale_similarity(a, b, levels);
    o.ssim = sim.ssim;
    o.euclid = sim.euclid;
    slots[k] = o;
  });
  std::vector<ShiftPair> shift;
  for (auto& o : slots) {
    if (!o) {
      ++res.skipped;
      continue;
    }
    shift.push_back({o->p_source, o->p_target, o->ssim, o->euclid});
    res.pairs.push_back(std::move(*o));
  }
  if (shift.size() >= 3) res.analysis = probability_shift_analysis(shift);
  return res;
}

// ---------------------------------------------------------------------------
// Benchmark runner

struct WcamRunConfig {
  WCAMConfig wcam;
  std::size_t top_k = 2;
};

inline WcamRunConfig wcam_run_config_from_json(const nlohmann::json& j) {
  WcamRunConfig c;
  c.wcam.sample_count = j.value("samples", kDefaultSampleCount);
  c.wcam.wavelet.levels = j.value("levels", 3);
  c.wcam.wavelet.cells_per_side = j.value("grid", std::size_t{4});
  c.wcam.wavelet.filter = filter_by_name(j.value("filter", std::string("haar")));
  c.wcam.sequence_kind = j.value("sequence", std::string("sobol"));
  c.wcam.seed = j.value("seed", std::uint64_t{0});
  c.top_k = j.value("top_k", std::size_t{2});
  const std::size_t g = c.wcam.wavelet.cells_per_side;
  const std::size_t k = (3 * static_cast<std::size_t>(c.wcam.wavelet.levels) + 1) * g * g;
  if (j.contains("cells") && j.at("cells").get<std::size_t>() != k)
    throw ArgumentError("wcam: cells = " + std::to_string(j.at("cells").get<std::size_t>()) +
                        " does not match (3 * levels + 1) * grid^2 = " + std::to_string(k));
  return c;
}

struct EvalReport {
  std::vector<SplitResult> splits;
  std::optional<PairedShiftResult> paired;
  nlohmann::json metadata = nlohmann::json::object();
  nlohmann::json wcam = nlohmann::json::array();
  nlohmann::json augment = nlohmann::json::object();
  double threshold = 0.5;
};

inline nlohmann::json to_json(const PairedShiftResult& p) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& o : p.pairs)
    pairs.push_back({{"pair_id", o.pair_id}, {"source_id", o.source_id}, {"target_id", o.target_id},
                     {"gsd_cm_per_px", o.gsd}, {"p_source", o.p_source}, {"p_target", o.p_target},
                     {"delta_p", o.delta_p}, {"ssim_level3", o.ssim}, {"euclid_level3", o.euclid}});
  nlohmann::json j = {{"n", p.pairs.size()}, {"unpaired_records", p.unpaired},
                      {"skipped_pairs", p.skipped}, {"pairs", pairs}};
  if (p.analysis) {
    j["ssim_vs_delta_p"] = to_json(p.analysis->ssim_vs_delta);
    j["euclid_vs_delta_p"] = to_json(p.analysis->euclid_vs_delta);
  } else {
    j["ssim_vs_delta_p"] = nullptr;
    j["euclid_vs_delta_p"] = nullptr;
  }
  return j;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : r.splits)
    splits.push_back({{"name", s.name}, {"n", s.predictions.size()}, {"skipped", s.skipped},
                      {"counts", to_json(s.counts)}, {"rates", to_json(rates_and_f1(s.counts))}});
  nlohmann::json j = {{"status", "complete"}, {"metadata", r.metadata}, {"threshold", r.threshold},
                      {"splits", splits}};
  j["paired"] = r.paired ? to_json(*r.paired) : nlohmann::json(nullptr);
  j["wcam"] = r.wcam;
  j["augment_preview"] = r.augment;
  return j;
}

inline int stage_exit_code(std::string_view stage) {
  static const std::map<std::string_view, int> codes = {
      {"config", 2}, {"manifest", 3}, {"model", 4}, {"evaluate", 5}, {"paired", 6},
      {"wcam", 7},   {"augment", 8},  {"report", 9}, {"scatter", 10}, {"metrics", 11}};
  const auto it = codes.find(stage);
  return it == codes.end() ? 1 : it->second;
}

struct RunOptions {
  std::optional<fs::path> output_dir;  // overrides the config entry
  std::optional<std::size_t> threads;  // overrides the config entry
};

inline constexpr const char* kIncompleteMarker = "INCOMPLETE";

namespace detail {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

// Runs the four-split evaluation, the paired shift analysis, WCAM heatmaps for
// the most shifted pairs and an augmentation preview. Writes report.json,
// predictions.csv, rates.csv, heatmaps/ and augment/ into the output
// directory. On failure the directory holds an INCOMPLETE marker instead of
// report.json and the StageError is rethrown.
inline EvalReport run_benchmark(const fs::path& config_path, const RunOptions& opts = {}) {
  const nlohmann::json cfg = detail::stage("config", [&] { return read_json_file(config_path); });
  const fs::path base = config_path.parent_path();
  const fs::path out_dir = opts.output_dir
                               ? *opts.output_dir
                               : detail::resolve(base, cfg.value("output_dir", std::string("out")));
  detail::stage("report", [&] {
    fs::create_directories(out_dir);
    fs::remove(out_dir / kIncompleteMarker);
    fs::remove(out_dir / "report.json");
    return 0;
  });
  try {
    EvalReport report;
    const std::size_t threads = opts.threads ? *opts.threads : cfg.value("threads", std::size_t{1});
    struct Parsed {
      std::vector<SplitSpec> splits;
      Provider source = Provider::google;
      int paired_levels = 3;
      std::optional<WcamRunConfig> wcam;
    };
    const Parsed parsed = detail::stage("config", [&] {
      Parsed p;
      p.splits = splits_from_json(cfg.at("splits"));
      report.threshold = cfg.value("threshold", 0.5);
      if (!(report.threshold >= 0.0 && report.threshold <= 1.0))
        throw ArgumentError("threshold must be in [0, 1]");
      const auto src = parse_provider(cfg.value("source_provider", std::string("google")));
      if (!src) throw ArgumentError("unknown source_provider");
      p.source = *src;
      p.paired_levels = cfg.value("paired_levels", 3);
      if (cfg.contains("wcam")) p.wcam = wcam_run_config_from_json(cfg.at("wcam"));
      return p;
    });
    const DatasetManifest manifest = detail::stage("manifest", [&] {
      auto m = load_manifest(detail::resolve(base, cfg.at("manifest").get<std::string>()));
      check_splits(parsed.splits, m);
      return m;
    });
    auto model = detail::stage("model", [&] { return load_model(cfg.at("model"), base); });
    if (auto* oracle = dynamic_cast<LabelOracleModel*>(model.get())) {
      detail::stage("model", [&] {
        for (const auto& s : parsed.splits)
          for (std::size_t i : s.select(manifest))
            oracle->register_image(prepare_image(manifest.records[i], s, load_record_image),
                                   manifest.records[i].positive);
        for (const auto& pr : manifest.pairs) {
          const auto& a = manifest.records[pr.first];
          const auto& b = manifest.records[pr.second];
          const auto [ia, ib] = load_pair(a, b, load_record_image);
          oracle->register_image(ia, a.positive);
          oracle->register_image(ib, b.positive);
        }
        return 0;
      });
    }

    nlohmann::json echo = cfg;
    echo.erase("threads");
    echo.erase("output_dir");
    report.metadata = {{"model", model->fingerprint()},
                       {"manifest_records", manifest.records.size()},
                       {"manifest_pairs", manifest.pairs.size()},
                       {"config", echo}};

    for (const auto& s : parsed.splits)
      report.splits.push_back(detail::stage(
          "evaluate", [&] { return evaluate_split(*model, manifest, s, report.threshold, threads); }));

    if (!manifest.pairs.empty())
      report.paired = detail::stage("paired", [&] {
        return paired_shift_run(*model, manifest, parsed.source, parsed.paired_levels, threads);
      });

    if (parsed.wcam && report.paired) {
      detail::stage("wcam", [&] {
        std::vector<const PairOutcome*> order;
        for (const auto& o : report.paired->pairs) order.push_back(&o);
        std::stable_sort(order.begin(), order.end(), [](const PairOutcome* a, const PairOutcome* b) {
          return a->delta_p > b->delta_p;
        });
        order.resize(std::min(order.size(), parsed.wcam->top_k));
        const fs::path dir = out_dir / "heatmaps";
        fs::create_directories(dir);
        WCAMConfig wc = parsed.wcam->wcam;
        wc.threads = threads;
        for (const PairOutcome* o : order) {
          const auto& s = manifest.records[manifest.index_of(o->source_id)];
          const auto& t = manifest.records[manifest.index_of(o->target_id)];
          const auto [a, b] = load_pair(s, t, load_record_image);
          const WCAMResult ra = compute_wcam(*model, a, wc);
          const WCAMResult rb = compute_wcam(*model, b, wc);
          const auto fa = render_heatmaps(ra, a, dir, o->pair_id + "_source");
          const auto fb = render_heatmaps(rb, b, dir, o->pair_id + "_target");
          auto side = [](const ManifestRecord& r, const WCAMResult& w, const HeatmapFiles& f) {
            return nlohmann::json{{"id", r.id},
                                  {"provider", provider_name(r.provider)},
                                  {"wavelet_png", "heatmaps/" + f.wavelet.filename().string()},
                                  {"overlay_png", "heatmaps/" + f.overlay.filename().string()},
                                  {"degenerate", f.degenerate},
                                  {"embedding", w.scale_embedding.values},
                                  {"output_variance", w.estimate.output_variance}};
          };
          report.wcam.push_back({{"pair_id", o->pair_id},
                                 {"delta_p", o->delta_p},
                                 {"source", side(s, ra, fa)},
                                 {"target", side(t, rb, fb)},
                                 {"embedding_distance",
                                  embedding_distance(ra.scale_embedding, rb.scale_embedding)}});
        }
        return 0;
      });
    }

    if (cfg.contains("augment_preview")) {
      detail::stage("augment", [&] {
        const auto& a = cfg.at("augment_preview");
        BlurConfig blur{a.value("blur_sigma", 2.0)};
        WaveletPerturbConfig wp;
        wp.cancel_fraction = a.value("wp_fraction", 0.2);
        wp.target_levels = a.value("wp_levels", std::vector<int>{1});
        wp.seed = a.value("seed", std::uint64_t{0});
        const auto pipeline = AugmentPipeline::blur_and_wavelet_perturbation(blur, wp);
        const auto idx = parsed.splits.front().select(manifest);
        const std::size_t count = std::min(idx.size(), a.value("count", std::size_t{1}));
        const fs::path dir = out_dir / "augment";
        fs::create_directories(dir);
        nlohmann::json files = nlohmann::json::array();
        for (std::size_t k = 0; k < count; ++k) {
          const auto& r = manifest.records[idx[k]];
          const Image img = prepare_image(r, parsed.splits.front(), load_record_image);
          const std::string name = r.id + "_augmented.png";
          write_png(dir / name, pipeline.apply(img));
          files.push_back("augment/" + name);
        }
        report.augment = {{"pipeline", to_json(pipeline)}, {"files", files}};
        return 0;
      });
    }

    detail::stage("report", [&] {
      std::ostringstream log;
      write_prediction_log(log, report.splits);
      detail::write_text(out_dir / "predictions.csv", log.str());
      std::string rates = std::string(kRatesCsvHeader) + "\n";
      for (const auto& s : report.splits) rates += rates_csv_row(s.name, s.counts) + "\n";
      detail::write_text(out_dir / "rates.csv", rates);
      detail::write_text(out_dir / "report.json", to_json(report).dump(2) + "\n");
      return 0;
    });
    return report;
  } catch (const StageError& e) {
    std::error_code ec;
    fs::remove(out_dir / "report.json", ec);
    std::ofstream marker(out_dir / kIncompleteMarker, std::ios::trunc);
    marker << e.stage() << '\n' << e.what() << '\n';
    throw;
  }
}

}  // namespace scaleshift

#endif  // SCALESHIFT_HARNESS_HPP_
