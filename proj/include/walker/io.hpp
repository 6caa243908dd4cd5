/* Copyright 2026 The Walker MOT Authors. All Rights Reserved.

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

// MOT Challenge text files, feature CSVs, sequence metadata and the on-disk
// dataset layout (one directory per sequence).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"
#include "walker/metrics.hpp"
#include "walker/synth.hpp"
#include "walker/text.hpp"
#include "walker/tracker.hpp"
#include "walker/trainer.hpp"

namespace walker {

// Frames are 1-based in files and 0-based everywhere else.
struct MotRecord {
  int frame = 1;
  int id = -1;
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;
  double conf = 1.0;
  int class_id = 1;
  double visibility = 1.0;

  Box box() const { return Box{x, y, w, h}; }
  friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

// Accepts 9 fields (frame,id,x,y,w,h,conf,class,visibility) or the 10-field
// variant whose last three columns are world coordinates; those are ignored
// and class/visibility default to 1.
inline MotRecord parse_mot(std::string_view line, std::size_t line_no = 0) {
  const auto fields = text::split(text::trim(line), ',');
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("line " + std::to_string(line_no) + ": " + why);
  };
  if (fields.size() != 9 && fields.size() != 10) {
    throw fail("expected 9 or 10 comma-separated fields, got " + std::to_string(fields.size()));
  }
  MotRecord r;
  try {
    const long long frame = text::parse_int(fields[0]);
    const long long id = text::parse_int(fields[1]);
    if (frame < 1 || frame > INT32_MAX) throw fail("frame must be >= 1");
    if (id < INT32_MIN || id > INT32_MAX) throw fail("id out of range");
    r.frame = static_cast<int>(frame);
    r.id = static_cast<int>(id);
    r.x = text::parse_double(fields[2]);
    r.y = text::parse_double(fields[3]);
    r.w = text::parse_double(fields[4]);
    r.h = text::parse_double(fields[5]);
    r.conf = text::parse_double(fields[6]);
    if (fields.size() == 9) {
      const long long cls = text::parse_int(fields[7]);
      if (cls < INT32_MIN || cls > INT32_MAX) throw fail("class out of range");
      r.class_id = static_cast<int>(cls);
      r.visibility = text::parse_double(fields[8]);
    }
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind("line ", 0) == 0) throw;
    throw fail(what);
  }
  if (!(std::isfinite(r.x) && std::isfinite(r.y) && std::isfinite(r.conf) &&
        std::isfinite(r.visibility))) {
    throw fail("non-finite value");
  }
  if (!(r.w > 0.0 && r.h > 0.0 && std::isfinite(r.w) && std::isfinite(r.h))) {
    throw fail("box width and height must be positive");
  }
  return r;
}

inline std::string serialize_mot(const MotRecord& r) {
  std::string s;
  s += std::to_string(r.frame) + ',' + std::to_string(r.id) + ',';
  for (double v : {r.x, r.y, r.w, r.h, r.conf}) s += text::format_double(v) + ',';
  s += std::to_string(r.class_id) + ',' + text::format_double(r.visibility);
  return s;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::vector<MotRecord> parse_mot_text(const std::string& content, const std::string& origin) {
  std::vector<MotRecord> out;
  std::istringstream in(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse_mot(line, n));
    } catch (const ParseError& e) {
      throw ParseError(origin + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<MotRecord> read_mot(const std::filesystem::path& path) {
  return parse_mot_text(read_text_file(path), path.string());
}

inline void write_mot(const std::filesystem::path& path, const std::vector<MotRecord>& records) {
  std::string s;
  for (const auto& r : records) s += serialize_mot(r) + '\n';
  write_text_file(path, s);
}

inline std::vector<LabeledBox> to_labeled(const std::vector<MotRecord>& records) {
  std::vector<LabeledBox> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(LabeledBox{r.frame - 1, r.id, r.box()});
  return out;
}

inline std::vector<MotRecord> results_to_mot(const std::vector<TrackOutput>& tracks) {
  std::vector<MotRecord> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) {
    out.push_back(MotRecord{t.frame + 1, t.track_id, t.box.x, t.box.y, t.box.w, t.box.h,
                            t.confidence, 1, 1.0});
  }
  return out;
}

// --------------------------------------------------------------------------
// key=value metadata

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& content, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(origin + ": line " + std::to_string(n) + ": expected key=value");
    }
    kv[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
  }
  return kv;
}

// --------------------------------------------------------------------------
// In-memory form of one sequence directory.

struct SequenceData {
  std::string name;
  int length = 0;
  double width = 512.0;
  double height = 512.0;
  std::uint64_t seed = 0;
  int annotation_stride = 1;
  std::vector<LabeledBox> ground_truth;  // 0-based frames
  SimulatedDetections frames;            // source_identity left empty
};

inline SequenceData make_sequence_data(std::string name, const SyntheticSequence& seq,
                                       const SimulatedDetections& dets, std::uint64_t seed,
                                       int annotation_stride) {
  SequenceData d;
  d.name = std::move(name);
  d.length = seq.length;
  d.width = seq.width;
  d.height = seq.height;
  d.seed = seed;
  d.annotation_stride = annotation_stride;
  for (int t = 0; t < seq.length; ++t) {
    for (const auto& obj : seq.objects) {
      if (obj.alive(t)) d.ground_truth.push_back(LabeledBox{t, obj.identity, obj.box_at(t)});
    }
  }
  d.frames.resize(dets.size());
  for (std::size_t t = 0; t < dets.size(); ++t) {
    d.frames[t].detections = dets[t].detections;
    d.frames[t].features = dets[t].features;
  }
  return d;
}

// Identity-free training view; ground truth only on frames = 0 (mod stride).
inline TrainingSequence training_view(const SequenceData& d, int stride) {
  if (stride < 1) throw InvalidArgument("training_view: stride must be >= 1");
  TrainingSequence ts;
  ts.frames.resize(static_cast<std::size_t>(d.length));
  ts.annotated.assign(static_cast<std::size_t>(d.length), false);
  for (int t = 0; t < d.length; ++t) {
    ts.annotated[static_cast<std::size_t>(t)] = t % stride == 0;
    ts.frames[static_cast<std::size_t>(t)].detections = d.frames[static_cast<std::size_t>(t)].detections;
    ts.frames[static_cast<std::size_t>(t)].features = d.frames[static_cast<std::size_t>(t)].features;
  }
  for (const auto& g : d.ground_truth) {
    if (g.frame % stride == 0) ts.frames[static_cast<std::size_t>(g.frame)].ground_truth.push_back(g.box);
  }
  return ts;
}

inline std::vector<FrameInput> tracker_inputs(const SequenceData& d, const EmbedderModel& model) {
  std::vector<FrameInput> out(static_cast<std::size_t>(d.length));
  for (int t = 0; t < d.length; ++t) {
    auto& f = out[static_cast<std::size_t>(t)];
    const auto& src = d.frames[static_cast<std::size_t>(t)];
    f.frame = t;
    f.detections = src.detections;
    f.embeddings = src.detections.empty() ? EmbeddingMatrix(0, model.embed_dim())
                                          : embed(src.features, model);
  }
  return out;
}

namespace detail {

inline std::string features_csv(const SimulatedDetections& frames) {
  std::string s;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    for (Eigen::Index k = 0; k < f.features.rows(); ++k) {
      s += std::to_string(t + 1) + ',' + std::to_string(k);
      for (Eigen::Index c = 0; c < f.features.cols(); ++c) s += ',' + text::format_double(f.features(k, c));
      s += '\n';
    }
  }
  return s;
}

}  // namespace detail

inline void write_sequence_dir(const std::filesystem::path& dir, const SequenceData& d) {
  std::filesystem::create_directories(dir);
  std::vector<MotRecord> gt;
  for (const auto& g : d.ground_truth) {
    gt.push_back(MotRecord{g.frame + 1, g.id, g.box.x, g.box.y, g.box.w, g.box.h, 1.0, 1, 1.0});
  }
  write_mot(dir / "gt.txt", gt);
  std::vector<MotRecord> det;
  for (std::size_t t = 0; t < d.frames.size(); ++t) {
    for (const auto& x : d.frames[t].detections) {
      det.push_back(MotRecord{static_cast<int>(t) + 1, -1, x.box.x, x.box.y, x.box.w, x.box.h,
                              x.confidence, x.class_id, 1.0});
    }
  }
  write_mot(dir / "det.txt", det);
  write_text_file(dir / "feat.csv", detail::features_csv(d.frames));
  std::ostringstream meta;
  meta << "length=" << d.length << "\n"
       << "width=" << text::format_double(d.width) << "\n"
       << "height=" << text::format_double(d.height) << "\n"
       << "seed=" << d.seed << "\n"
       << "annotation_stride=" << d.annotation_stride << "\n";
  write_text_file(dir / "meta.txt", meta.str());
}

inline SequenceData read_sequence_dir(const std::filesystem::path& dir, bool require_gt = true) {
  SequenceData d;
  d.name = dir.filename().string();
  if (d.name.empty()) d.name = dir.parent_path().filename().string();
  const KeyValues meta = parse_key_values(read_text_file(dir / "meta.txt"), (dir / "meta.txt").string());
  auto need = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ParseError((dir / "meta.txt").string() + ": missing " + key);
    return it->second;
  };
  try {
    d.length = static_cast<int>(text::parse_int(need("length")));
    d.width = text::parse_double(need("width"));
    d.height = text::parse_double(need("height"));
    d.seed = text::parse_uint(need("seed"));
    d.annotation_stride = static_cast<int>(text::parse_int(need("annotation_stride")));
  } catch (const ParseError& e) {
    throw ParseError((dir / "meta.txt").string() + ": " + e.what());
  }
  if (d.length < 1) throw ParseError((dir / "meta.txt").string() + ": length must be >= 1");

  if (require_gt || std::filesystem::exists(dir / "gt.txt")) {
    for (const auto& r : read_mot(dir / "gt.txt")) {
      if (r.frame > d.length) throw ParseError((dir / "gt.txt").string() + ": frame beyond length");
      d.ground_truth.push_back(LabeledBox{r.frame - 1, r.id, r.box()});
    }
  }

  d.frames.resize(static_cast<std::size_t>(d.length));
  for (const auto& r : read_mot(dir / "det.txt")) {
    if (r.frame > d.length) throw ParseError((dir / "det.txt").string() + ": frame beyond length");
    d.frames[static_cast<std::size_t>(r.frame - 1)].detections.push_back(
        Detection{r.box(), r.conf, r.frame - 1, r.class_id});
  }

  // feat.csv: frame, det_index, features...
  const std::filesystem::path feat_path = dir / "feat.csv";
  if (!std::filesystem::exists(feat_path)) {
    throw Error(feat_path.string() + " is required: features stand in for image crops");
  }
  std::map<std::pair<int, int>, std::vector<double>> rows;
  int dim = -1;
  {
    std::istringstream in(read_text_file(feat_path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty()) continue;
      const auto fields = text::split(text::trim(line), ',');
      auto fail = [&](const std::string& why) {
        return ParseError(feat_path.string() + ": line " + std::to_string(n) + ": " + why);
      };
      if (fields.size() < 3) throw fail("expected frame,det_index,features...");
      if (dim < 0) dim = static_cast<int>(fields.size()) - 2;
      if (static_cast<int>(fields.size()) - 2 != dim) throw fail("inconsistent feature dimension");
      std::vector<double> v;
      int frame = 0, index = 0;
      try {
        frame = static_cast<int>(text::parse_int(fields[0]));
        index = static_cast<int>(text::parse_int(fields[1]));
        for (std::size_t c = 2; c < fields.size(); ++c) v.push_back(text::parse_double(fields[c]));
      } catch (const ParseError& e) {
        throw fail(e.what());
      }
      if (!rows.emplace(std::make_pair(frame, index), std::move(v)).second) throw fail("duplicate row");
    }
  }
  std::size_t used = 0;
  for (int t = 0; t < d.length; ++t) {
    auto& f = d.frames[static_cast<std::size_t>(t)];
    f.features.resize(static_cast<Eigen::Index>(f.detections.size()), std::max(dim, 0));
    for (std::size_t k = 0; k < f.detections.size(); ++k) {
      const auto it = rows.find({t + 1, static_cast<int>(k)});
      if (it == rows.end()) {
        throw ParseError(feat_path.string() + ": no features for frame " + std::to_string(t + 1) +
                         " detection " + std::to_string(k));
      }
      for (int c = 0; c < dim; ++c) f.features(static_cast<Eigen::Index>(k), c) = it->second[static_cast<std::size_t>(c)];
      ++used;
    }
  }
  if (used != rows.size()) throw ParseError(feat_path.string() + ": rows without a matching detection");
  return d;
}

// Sequence directories of a dataset, sorted by name.
inline std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& dataset) {
  if (!std::filesystem::is_directory(dataset)) throw Error("not a directory: " + dataset.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dataset)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "meta.txt")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error("no sequences under " + dataset.string());
  return out;
}

}  // namespace walker
