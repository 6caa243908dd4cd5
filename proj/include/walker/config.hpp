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

// Flat key=value run configuration covering generation, training and
// tracking, with the three benchmark presets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "walker/error.hpp"
#include "walker/io.hpp"
#include "walker/synth.hpp"
#include "walker/text.hpp"
#include "walker/tracker.hpp"
#include "walker/trainer.hpp"

namespace walker {

struct RunConfig {
  std::string preset = "dancetrack";
  int sequences = 30;
  std::uint64_t seed = 1;
  int annotation_stride = 10;  // written to meta.txt by synth
  GenerationSpec generation;
  NoiseConfig noise;
  TrainConfig train;
  TrackerConfig track;

  // Desk-scale defaults: every object pair meets head on and bounces, the
  // per-detection nuisance channels swamp raw features, and training uses a
  // small step (larger steps can lock in early pseudo-labels).
  RunConfig() {
    generation.auto_crossings = 3;
    generation.bounce_prob = 1.0;
    generation.crossing_dwell = 3;
    noise.nuisance_sigma = 2.0;
    noise.fp_rate_per_frame = 0.2;
    noise.fn_rate = 0.01;
    noise.occlusion_conf_decay = 1.0;
    train.learning_rate = 0.002;
    train.epochs = 100;
  }

  void validate() const {
    if (sequences < 1) throw InvalidArgument("sequences must be >= 1");
    if (annotation_stride < 1) throw InvalidArgument("annotation_stride must be >= 1");
    generation.validate();
    noise.validate();
    train.validate();
    track.validate();
  }
};

// Training and inference values of one benchmark column.
inline void apply_preset(RunConfig& c, const std::string& name) {
  TrainConfig& t = c.train;
  TrackerConfig& k = c.track;
  t.alpha1 = 0.7;
  t.alpha2 = 0.3;
  t.beta_obj = 0.3;
  t.beta_cycle = 0.8;
  t.tau = 0.05;
  k.det_conf_thr = 0.1;
  k.beta_low = 0.1;
  k.beta_match_high = 0.1;
  k.beta_biwalk = 0.2;
  k.beta_iou = 0.5;
  k.lambda_biwalk = 2.0;
  k.beta_match_low = 0.5;
  k.beta_cycle_inf = 0.1;
  k.tau_inf = 0.07;
  if (name == "mot17") {
    t.gamma1 = 1.0;
    t.gamma2 = 2.0;
    t.k_hat = 10;
    k.det_nms_iou = 0.7;
    k.beta_new = 0.75;
    k.beta_high = 0.3;
    k.max_inactive = 30;
    k.ema_momentum = 0.5;
  } else if (name == "dancetrack") {
    t.gamma1 = 1.0;
    t.gamma2 = 2.0;
    t.k_hat = 10;
    k.det_nms_iou = 0.6;
    k.beta_new = 0.8;
    k.beta_high = 0.6;
    k.max_inactive = 20;
    k.ema_momentum = 0.8;
  } else if (name == "bdd100k") {
    t.gamma1 = 0.5;
    t.gamma2 = 1.0;
    t.k_hat = 3;
    k.det_nms_iou = 0.65;
    k.beta_new = 0.5;
    k.beta_high = 0.35;
    k.max_inactive = 10;
    k.ema_momentum = 0.8;
  } else {
    throw InvalidArgument("unknown preset '" + name + "' (mot17, dancetrack, bdd100k)");
  }
  c.preset = name;
}

inline RunConfig preset_config(const std::string& name) {
  RunConfig c;
  apply_preset(c, name);
  return c;
}

struct ConfigKey {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

namespace detail {

template <typename Ref>
ConfigKey real_key(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const RunConfig& c) { return text::format_double(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, std::string_view v) {
            const double x = text::parse_double(v);
            if (!std::isfinite(x)) throw ParseError("value must be finite");
            ref(c) = x;
          }};
}

template <typename Ref>
ConfigKey int_key(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, std::string_view v) {
            const long long x = text::parse_int(v);
            if (x < INT32_MIN || x > INT32_MAX) throw ParseError("integer out of range");
            ref(c) = static_cast<int>(x);
          }};
}

template <typename Ref>
ConfigKey seed_key(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, std::string_view v) {
            ref(c) = text::parse_uint(v);
          }};
}

template <typename Ref>
ConfigKey bool_key(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [ref](RunConfig& c, std::string_view v) {
            if (v == "true" || v == "1") {
              ref(c) = true;
            } else if (v == "false" || v == "0") {
              ref(c) = false;
            } else {
              throw ParseError("expected true or false");
            }
          }};
}

template <typename Enum, typename Ref>
ConfigKey enum_key(std::string name, Ref ref, std::vector<std::pair<std::string, Enum>> names) {
  return {std::move(name),
          [ref, names](const RunConfig& c) {
            const Enum e = ref(const_cast<RunConfig&>(c));
            for (const auto& [n, v] : names)
              if (v == e) return n;
            return std::string("?");
          },
          [ref, names](RunConfig& c, std::string_view v) {
            std::string options;
            for (const auto& [n, e] : names) {
              if (n == v) {
                ref(c) = e;
                return;
              }
              options += (options.empty() ? "" : ", ") + n;
            }
            throw ParseError("expected one of: " + options);
          }};
}

}  // namespace detail

#define WALKER_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

// Every key, in echo order.
inline const std::vector<ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = {
      // dataset generation
      int_key("sequences", WALKER_REF(sequences)),
      seed_key("seed", WALKER_REF(seed)),
      int_key("annotation_stride", WALKER_REF(annotation_stride)),
      int_key("length", WALKER_REF(generation.length)),
      real_key("width", WALKER_REF(generation.width)),
      real_key("height", WALKER_REF(generation.height)),
      int_key("objects", WALKER_REF(generation.num_objects)),
      int_key("crossings", WALKER_REF(generation.auto_crossings)),
      real_key("bounce_prob", WALKER_REF(generation.bounce_prob)),
      int_key("crossing_dwell", WALKER_REF(generation.crossing_dwell)),
      real_key("min_size", WALKER_REF(generation.min_size)),
      real_key("max_size", WALKER_REF(generation.max_size)),
      real_key("min_aspect", WALKER_REF(generation.min_aspect)),
      real_key("max_aspect", WALKER_REF(generation.max_aspect)),
      real_key("min_speed", WALKER_REF(generation.min_speed)),
      real_key("max_speed", WALKER_REF(generation.max_speed)),
      real_key("wobble", WALKER_REF(generation.wobble_amplitude)),
      real_key("margin", WALKER_REF(generation.margin)),
      bool_key("static_objects", WALKER_REF(generation.static_objects)),
      bool_key("uniform_appearance", WALKER_REF(generation.uniform_appearance)),
      real_key("uniform_radius", WALKER_REF(generation.uniform_radius)),
      real_key("fps", WALKER_REF(generation.fps)),
      // detection simulation
      real_key("box_jitter", WALKER_REF(noise.box_jitter_sigma)),
      real_key("true_conf_mean", WALKER_REF(noise.true_conf_mean)),
      real_key("true_conf_sigma", WALKER_REF(noise.true_conf_sigma)),
      real_key("false_conf_mean", WALKER_REF(noise.false_conf_mean)),
      real_key("false_conf_sigma", WALKER_REF(noise.false_conf_sigma)),
      real_key("fn_rate", WALKER_REF(noise.fn_rate)),
      real_key("fp_rate", WALKER_REF(noise.fp_rate_per_frame)),
      real_key("occlusion_conf_decay", WALKER_REF(noise.occlusion_conf_decay)),
      real_key("occlusion_iou", WALKER_REF(noise.occlusion_iou)),
      real_key("appearance_sigma", WALKER_REF(noise.appearance_sigma)),
      real_key("nuisance_sigma", WALKER_REF(noise.nuisance_sigma)),
      // training
      int_key("k_hat", WALKER_REF(train.k_hat)),
      real_key("alpha1", WALKER_REF(train.alpha1)),
      real_key("alpha2", WALKER_REF(train.alpha2)),
      real_key("beta_obj", WALKER_REF(train.beta_obj)),
      real_key("beta_cycle", WALKER_REF(train.beta_cycle)),
      real_key("tau", WALKER_REF(train.tau)),
      real_key("lambda1", WALKER_REF(train.gamma1)),
      real_key("lambda2", WALKER_REF(train.gamma2)),
      int_key("neg_ratio", WALKER_REF(train.neg_ratio)),
      int_key("max_pos_nodes", WALKER_REF(train.max_pos_nodes)),
      real_key("learning_rate", WALKER_REF(train.learning_rate)),
      int_key("epochs", WALKER_REF(train.epochs)),
      enum_key<AnnotationSetting>("setting", WALKER_REF(train.setting),
                                  {{"sparse", AnnotationSetting::kSparse},
                                   {"dense", AnnotationSetting::kDense}}),
      int_key("train_stride", WALKER_REF(train.annotation_stride)),
      seed_key("train_seed", WALKER_REF(train.seed)),
      int_key("embed_dim", WALKER_REF(train.embed_dim)),
      int_key("proposals_per_detection", WALKER_REF(train.proposals_per_detection)),
      real_key("proposal_jitter", WALKER_REF(train.proposal_jitter)),
      real_key("proposal_feature_sigma", WALKER_REF(train.proposal_feature_sigma)),
      enum_key<TargetPolicy>("targets", WALKER_REF(train.targets),
                             {{"multi", TargetPolicy::kMultiPositive},
                              {"single", TargetPolicy::kSinglePositive}}),
      // tracking
      enum_key<TrackerMode>("mode", WALKER_REF(track.mode),
                            {{"walker", TrackerMode::kWalker}, {"qd_walker", TrackerMode::kQdWalker}}),
      enum_key<SimilarityMetric>("metric", WALKER_REF(track.metric),
                                 {{"biwalk", SimilarityMetric::kBiwalk},
                                  {"bisoftmax", SimilarityMetric::kBisoftmax},
                                  {"cosine", SimilarityMetric::kCosine}}),
      real_key("det_conf_thr", WALKER_REF(track.det_conf_thr)),
      real_key("det_nms_iou", WALKER_REF(track.det_nms_iou)),
      real_key("beta_new", WALKER_REF(track.beta_new)),
      real_key("beta_high", WALKER_REF(track.beta_high)),
      real_key("beta_low", WALKER_REF(track.beta_low)),
      real_key("beta_match_high", WALKER_REF(track.beta_match_high)),
      real_key("beta_biwalk", WALKER_REF(track.beta_biwalk)),
      real_key("beta_iou", WALKER_REF(track.beta_iou)),
      real_key("lambda_biwalk", WALKER_REF(track.lambda_biwalk)),
      real_key("beta_match_low", WALKER_REF(track.beta_match_low)),
      real_key("beta_cycle_inf", WALKER_REF(track.beta_cycle_inf)),
      real_key("tau_inf", WALKER_REF(track.tau_inf)),
      int_key("max_inactive", WALKER_REF(track.max_inactive)),
      real_key("ema_momentum", WALKER_REF(track.ema_momentum)),
      int_key("backdrop_frames", WALKER_REF(track.backdrop_frames)),
      real_key("beta_match", WALKER_REF(track.beta_match)),
      real_key("beta_obj_inf", WALKER_REF(track.beta_obj)),
      bool_key("appearance", WALKER_REF(track.appearance)),
      bool_key("interpolate", WALKER_REF(track.interpolate)),
      int_key("interpolation_max_gap", WALKER_REF(track.interpolation_max_gap)),
  };
  return keys;
}

#undef WALKER_REF

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw ParseError("unknown key '" + std::string(key) + "'");
  try {
    k->set(c, text::trim(value));
  } catch (const ParseError& e) {
    throw ParseError(std::string(key) + ": " + e.what());
  }
}

// "preset=<name>" may only appear first. Without it every key must be given.
inline RunConfig parse_config(const std::string& content, const std::string& origin = "config") {
  RunConfig c;
  bool have_preset = false;
  bool first = true;
  std::set<std::string> seen;
  std::istringstream in(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto where = origin + ": line " + std::to_string(n) + ": ";
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(where + "expected key=value");
    const std::string key(text::trim(t.substr(0, eq)));
    const std::string_view value = text::trim(t.substr(eq + 1));
    if (key == "preset") {
      if (!first) throw ParseError(where + "preset must come first");
      try {
        apply_preset(c, std::string(value));
      } catch (const InvalidArgument& e) {
        throw ParseError(where + e.what());
      }
      have_preset = true;
    } else {
      if (!seen.insert(key).second) throw ParseError(where + "duplicate key '" + key + "'");
      try {
        set_config_value(c, key, value);
      } catch (const ParseError& e) {
        throw ParseError(where + e.what());
      }
    }
    first = false;
  }
  if (!have_preset) {
    if (seen.empty()) throw ParseError(origin + ": empty configuration (give a preset or every key)");
    for (const auto& k : config_keys()) {
      if (!seen.count(k.name)) throw ParseError(origin + ": missing key '" + k.name + "' and no preset");
    }
    c.preset.clear();
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("config file not found: " + path.string());
  return parse_config(read_text_file(path), path.string());
}

// Complete listing of every key; parse_config accepts it without a preset.
inline std::string echo_config(const RunConfig& c) {
  std::string s = "# resolved configuration\n";
  for (const auto& k : config_keys()) s += k.name + "=" + k.get(c) + "\n";
  return s;
}

}  // namespace walker
