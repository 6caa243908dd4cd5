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

// Procedural ground-truth sequences and a detector simulator.
//
// Objects are axis-aligned boxes moving on piecewise-linear paths (walls and
// planned crossings change direction) with a little sinusoidal wobble. Each
// object carries appearance parameters from which per-detection feature
// vectors are drawn; these stand in for pooled RoI features.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"

namespace walker {

// Feature layout: [0,3) mean color, [3,6) color variance, [6,9) normalized
// (w, h, aspect), [9,12) texture signature.
inline constexpr int kFeatureDim = 12;
inline constexpr int kColorOffset = 0;
inline constexpr int kColorVarOffset = 3;
inline constexpr int kGeometryOffset = 6;
inline constexpr int kTextureOffset = 9;
inline constexpr double kGeometryScale = 64.0;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent, reproducible sub-stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x51ed2701ULL));
}

struct SyntheticObject {
  int identity = 0;
  int birth = 0;  // first alive frame
  int death = 0;  // one past the last alive frame
  std::vector<Box> trajectory;  // trajectory[t - birth]
  Eigen::Vector3d color_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d color_var = Eigen::Vector3d::Zero();
  Eigen::Vector3d texture = Eigen::Vector3d::Zero();

  bool alive(int frame) const { return frame >= birth && frame < death; }
  const Box& box_at(int frame) const { return trajectory.at(static_cast<std::size_t>(frame - birth)); }
};

struct SyntheticSequence {
  int length = 0;
  double width = 512.0;
  double height = 512.0;
  std::vector<SyntheticObject> objects;
  double fps = 20.0;
};

// Two objects meet (boxes nearly coincide) at `frame`; with `bounce` both
// reverse direction there, otherwise they pass through each other.
struct CrossingSpec {
  int a = 0;
  int b = 1;
  int frame = 0;
  bool bounce = false;
};

struct GenerationSpec {
  int length = 40;
  double width = 512.0;
  double height = 512.0;
  int num_objects = 6;
  // Planned crossings; when empty, `auto_crossings` pairs are planned at
  // random frames with `bounce_prob` chance of a bounce.
  std::vector<CrossingSpec> crossings;
  int auto_crossings = 0;
  double bounce_prob = 0.5;
  int crossing_dwell = 0;  // frames crossing partners stay together
  double min_size = 36.0;
  double max_size = 56.0;
  double min_aspect = 1.2;  // h / w
  double max_aspect = 2.0;
  double min_speed = 1.5;  // px / frame
  double max_speed = 4.0;
  double wobble_amplitude = 1.0;  // px
  double margin = 4.0;
  bool static_objects = false;
  bool uniform_appearance = false;
  double uniform_radius = 0.05;
  double fps = 20.0;

  void validate() const {
    if (length < 2) throw InvalidArgument("GenerationSpec: length must be >= 2");
    if (num_objects < 1) throw InvalidArgument("GenerationSpec: need at least one object");
    if (!(min_size > 0.0 && max_size >= min_size)) throw InvalidArgument("GenerationSpec: bad size range");
    if (!(min_aspect > 0.0 && max_aspect >= min_aspect)) throw InvalidArgument("GenerationSpec: bad aspect range");
    if (!(min_speed >= 0.0 && max_speed >= min_speed)) throw InvalidArgument("GenerationSpec: bad speed range");
    if (crossing_dwell < 0) throw InvalidArgument("GenerationSpec: crossing_dwell must be >= 0");
    const double cell_w = max_size + 2.0 * margin;
    const double cell_h = max_size * max_aspect + 2.0 * margin;
    const auto capacity = static_cast<long>(std::floor(width / cell_w) * std::floor(height / cell_h));
    if (capacity < num_objects) {
      throw InvalidArgument("GenerationSpec: canvas cannot host " + std::to_string(num_objects) +
                            " objects");
    }
    const int planned = crossings.empty() ? auto_crossings : static_cast<int>(crossings.size());
    if (2 * planned > num_objects) throw InvalidArgument("GenerationSpec: too many crossings");
    for (const auto& c : crossings) {
      if (c.a == c.b || c.a < 0 || c.b < 0 || c.a >= num_objects || c.b >= num_objects ||
          c.frame < 0 || c.frame >= length) {
        throw InvalidArgument("GenerationSpec: invalid crossing");
      }
    }
  }
};

inline Eigen::Vector3d texture_signature(std::uint64_t pattern_seed) {
  Eigen::Vector3d t;
  std::uint64_t s = pattern_seed;
  for (int k = 0; k < 3; ++k) {
    s = splitmix64(s);
    t(k) = 2.0 * (static_cast<double>(s >> 11) * 0x1.0p-53) - 1.0;
  }
  return t;
}

namespace detail {

// Integrates `velocity` from `start` for `steps` frames, reflecting off the
// canvas walls. Returns top-left positions, first entry = start.
inline std::vector<Eigen::Vector2d> integrate_path(Eigen::Vector2d start, Eigen::Vector2d velocity,
                                                   int steps, double lo_x, double hi_x, double lo_y,
                                                   double hi_y) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(start);
  Eigen::Vector2d p = start;
  for (int s = 0; s < steps; ++s) {
    p += velocity;
    if (p.x() < lo_x) { p.x() = 2.0 * lo_x - p.x(); velocity.x() = -velocity.x(); }
    if (p.x() > hi_x) { p.x() = 2.0 * hi_x - p.x(); velocity.x() = -velocity.x(); }
    if (p.y() < lo_y) { p.y() = 2.0 * lo_y - p.y(); velocity.y() = -velocity.y(); }
    if (p.y() > hi_y) { p.y() = 2.0 * hi_y - p.y(); velocity.y() = -velocity.y(); }
    p.x() = std::clamp(p.x(), lo_x, hi_x);
    p.y() = std::clamp(p.y(), lo_y, hi_y);
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

inline SyntheticSequence generate_sequence(const GenerationSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticSequence seq;
  seq.length = spec.length;
  seq.width = spec.width;
  seq.height = spec.height;
  seq.fps = spec.fps;

  const int n = spec.num_objects;
  std::vector<double> widths(n), heights(n);
  for (int k = 0; k < n; ++k) {
    widths[k] = uni(spec.min_size, spec.max_size);
    heights[k] = widths[k] * uni(spec.min_aspect, spec.max_aspect);
  }

  std::vector<CrossingSpec> crossings = spec.crossings;
  if (crossings.empty() && spec.auto_crossings > 0) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    // Spread the meetings over the middle of the sequence.
    for (int c = 0; c < spec.auto_crossings; ++c) {
      CrossingSpec cs;
      cs.a = ids[2 * c];
      cs.b = ids[2 * c + 1];
      const double lo = 0.25 * spec.length, hi = 0.75 * spec.length;
      cs.frame = static_cast<int>(std::lround(lo + (hi - lo) * (c + 0.5) / spec.auto_crossings));
      cs.frame = std::clamp(cs.frame + static_cast<int>(std::lround(uni(-2.0, 2.0))), 1, spec.length - 2);
      cs.bounce = unit(rng) < spec.bounce_prob;
      crossings.push_back(cs);
    }
  }
  // Crossing partners get near-equal sizes so their boxes overlap strongly.
  for (const auto& c : crossings) {
    widths[c.b] = widths[c.a] * uni(0.92, 1.08);
    heights[c.b] = heights[c.a] * uni(0.92, 1.08);
  }

  // Top-left positions per object and frame.
  std::vector<std::vector<Eigen::Vector2d>> paths(n);
  auto bounds = [&](int k) {
    return std::array<double, 4>{spec.margin, spec.width - spec.margin - widths[k], spec.margin,
                                 spec.height - spec.margin - heights[k]};
  };
  auto random_velocity = [&]() {
    if (spec.static_objects) return Eigen::Vector2d(0.0, 0.0);
    const double angle = uni(0.0, 2.0 * std::numbers::pi);
    const double speed = uni(spec.min_speed, spec.max_speed);
    return Eigen::Vector2d(speed * std::cos(angle), speed * std::sin(angle));
  };
  // Runs a path outward from `frame` in both time directions, holding
  // still for `dwell` frames after it.
  auto path_through = [&](int k, Eigen::Vector2d at, int frame, Eigen::Vector2d v_before,
                          Eigen::Vector2d v_after) {
    const auto b = bounds(k);
    const int resume = std::min(frame + spec.crossing_dwell, spec.length - 1);
    auto fwd = detail::integrate_path(at, v_after, spec.length - 1 - resume, b[0], b[1], b[2], b[3]);
    auto bwd = detail::integrate_path(at, -v_before, frame, b[0], b[1], b[2], b[3]);
    std::vector<Eigen::Vector2d> p(static_cast<std::size_t>(spec.length));
    for (int t = 0; t <= frame; ++t) p[t] = bwd[static_cast<std::size_t>(frame - t)];
    for (int t = frame; t <= resume; ++t) p[t] = at;
    for (int t = resume; t < spec.length; ++t) p[t] = fwd[static_cast<std::size_t>(t - resume)];
    return p;
  };

  std::vector<char> planned(n, 0);
  for (const auto& c : crossings) {
    planned[c.a] = planned[c.b] = 1;
    const double wmax = std::max(widths[c.a], widths[c.b]);
    const double hmax = std::max(heights[c.a], heights[c.b]);
    const double cx = uni(spec.margin + wmax + 60.0, spec.width - spec.margin - wmax - 60.0);
    const double cy = uni(spec.margin + hmax + 60.0, spec.height - spec.margin - hmax - 60.0);
    const double angle = uni(0.0, 2.0 * std::numbers::pi);
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    const double speed_a = spec.static_objects ? 0.0 : uni(spec.min_speed, spec.max_speed);
    const double speed_b = spec.static_objects ? 0.0 : uni(spec.min_speed, spec.max_speed);
    const double gap = 0.12 * wmax;
    const Eigen::Vector2d center_a = Eigen::Vector2d(cx, cy) - 0.5 * gap * dir;
    const Eigen::Vector2d center_b = Eigen::Vector2d(cx, cy) + 0.5 * gap * dir;
    const Eigen::Vector2d va = speed_a * dir;
    const Eigen::Vector2d vb = -speed_b * dir;
    const Eigen::Vector2d tl_a = center_a - 0.5 * Eigen::Vector2d(widths[c.a], heights[c.a]);
    const Eigen::Vector2d tl_b = center_b - 0.5 * Eigen::Vector2d(widths[c.b], heights[c.b]);
    paths[c.a] = path_through(c.a, tl_a, c.frame, va, c.bounce ? Eigen::Vector2d(-va) : va);
    paths[c.b] = path_through(c.b, tl_b, c.frame, vb, c.bounce ? Eigen::Vector2d(-vb) : vb);
  }

  // Free objects start on a coarse grid so they do not begin overlapping.
  {
    const double cell_w = spec.max_size + 2.0 * spec.margin;
    const double cell_h = spec.max_size * spec.max_aspect + 2.0 * spec.margin;
    const int cols = static_cast<int>(std::floor(spec.width / cell_w));
    const int rows = static_cast<int>(std::floor(spec.height / cell_h));
    std::vector<int> cells(static_cast<std::size_t>(cols * rows));
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    std::size_t next = 0;
    for (int k = 0; k < n; ++k) {
      if (planned[k]) continue;
      const int cell = cells[next++];
      const double x0 = (cell % cols) * cell_w + spec.margin;
      const double y0 = (cell / cols) * cell_h + spec.margin;
      const Eigen::Vector2d start(x0 + uni(0.0, cell_w - 2.0 * spec.margin - widths[k]),
                                  y0 + uni(0.0, cell_h - 2.0 * spec.margin - heights[k]));
      const auto b = bounds(k);
      paths[k] = detail::integrate_path(start, random_velocity(), spec.length - 1, b[0], b[1], b[2], b[3]);
    }
  }

  // Uniform mode: every sequence shares one look (mid grey, flat texture).
  const Eigen::Vector3d base_color = Eigen::Vector3d::Constant(0.5);
  const Eigen::Vector3d base_texture = Eigen::Vector3d::Zero();
  auto in_ball = [&](const Eigen::Vector3d& center) {
    Eigen::Vector3d d(gauss(rng), gauss(rng), gauss(rng));
    return Eigen::Vector3d(center + spec.uniform_radius * unit(rng) * d.normalized());
  };
  for (int k = 0; k < n; ++k) {
    SyntheticObject obj;
    obj.identity = k + 1;
    obj.birth = 0;
    obj.death = spec.length;
    if (spec.uniform_appearance) {
      obj.color_mean = in_ball(base_color);
      obj.color_var = Eigen::Vector3d::Constant(0.15);
      obj.texture = in_ball(base_texture);
    } else {
      obj.color_mean = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
      obj.color_var = Eigen::Vector3d(uni(0.05, 0.25), uni(0.05, 0.25), uni(0.05, 0.25));
      obj.texture = texture_signature(rng());
    }
    const double phase_x = uni(0.0, 2.0 * std::numbers::pi);
    const double phase_y = uni(0.0, 2.0 * std::numbers::pi);
    const double period = uni(8.0, 16.0);
    const double amp = spec.static_objects ? 0.0 : spec.wobble_amplitude;
    for (int t = 0; t < spec.length; ++t) {
      const double arg = 2.0 * std::numbers::pi * t / period;
      obj.trajectory.push_back(Box{paths[k][t].x() + amp * std::sin(arg + phase_x),
                                   paths[k][t].y() + amp * std::sin(arg + phase_y), widths[k],
                                   heights[k]});
    }
    seq.objects.push_back(std::move(obj));
  }
  return seq;
}

struct NoiseConfig {
  double box_jitter_sigma = 0.03;  // fraction of box size
  double true_conf_mean = 0.85;
  double true_conf_sigma = 0.08;
  double false_conf_mean = 0.25;
  double false_conf_sigma = 0.1;
  double fn_rate = 0.03;
  double fp_rate_per_frame = 0.5;  // expected count
  double occlusion_conf_decay = 0.5;
  double occlusion_iou = 0.3;
  // Feature noise: identity-bearing channels stay clean, nuisance channels
  // (color variance) are re-drawn per detection.
  double appearance_sigma = 0.03;
  double nuisance_sigma = 0.5;

  static NoiseConfig noiseless() {
    NoiseConfig n;
    n.box_jitter_sigma = 0.0;
    n.true_conf_sigma = 0.0;
    n.false_conf_sigma = 0.0;
    n.fn_rate = 0.0;
    n.fp_rate_per_frame = 0.0;
    n.occlusion_conf_decay = 1.0;
    n.appearance_sigma = 0.0;
    n.nuisance_sigma = 0.0;
    return n;
  }

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(fn_rate) || !unit(occlusion_conf_decay) || !unit(true_conf_mean) ||
        !unit(false_conf_mean) || !(fp_rate_per_frame >= 0.0)) {
      throw InvalidArgument("NoiseConfig: rates must lie in [0, 1]");
    }
    if (box_jitter_sigma < 0.0 || true_conf_sigma < 0.0 || false_conf_sigma < 0.0 ||
        appearance_sigma < 0.0 || nuisance_sigma < 0.0) {
      throw InvalidArgument("NoiseConfig: sigmas must be >= 0");
    }
  }
};

inline Eigen::Vector3d geometry_features(const Box& b) {
  return Eigen::Vector3d(b.w / kGeometryScale, b.h / kGeometryScale, b.w / b.h);
}

// Detections of one frame; features.row(k) belongs to detections[k].
struct FrameDetections {
  std::vector<Detection> detections;
  Eigen::MatrixXd features;         // detections x kFeatureDim
  std::vector<int> source_identity;  // generating object, -1 for false positives
};

using SimulatedDetections = std::vector<FrameDetections>;

// Objects occluded by a lower-identity object in `frame`.
inline std::vector<char> occlusion_flags(const SyntheticSequence& seq, int frame, double iou_thr) {
  std::vector<char> occluded(seq.objects.size(), 0);
  for (std::size_t a = 0; a < seq.objects.size(); ++a) {
    if (!seq.objects[a].alive(frame)) continue;
    for (std::size_t b = 0; b < seq.objects.size(); ++b) {
      if (b == a || !seq.objects[b].alive(frame)) continue;
      if (seq.objects[b].identity < seq.objects[a].identity &&
          iou(seq.objects[a].box_at(frame), seq.objects[b].box_at(frame)) > iou_thr) {
        occluded[a] = 1;
      }
    }
  }
  return occluded;
}

inline SimulatedDetections simulate_detections(const SyntheticSequence& seq, const NoiseConfig& noise,
                                               std::uint64_t seed) {
  noise.validate();
  SimulatedDetections out(static_cast<std::size_t>(seq.length));
  for (int t = 0; t < seq.length; ++t) {
    std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(t)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto conf_draw = [&](double mean, double sigma) {
      return std::clamp(mean + sigma * gauss(rng), 0.0, 1.0);
    };
    const auto occluded = occlusion_flags(seq, t, noise.occlusion_iou);

    std::vector<Detection> dets;
    std::vector<Eigen::VectorXd> feats;
    std::vector<int> ids;
    for (std::size_t k = 0; k < seq.objects.size(); ++k) {
      const auto& obj = seq.objects[k];
      if (!obj.alive(t)) continue;
      double drop = noise.fn_rate;
      double conf_scale = 1.0;
      if (occluded[k]) {
        drop = noise.fn_rate + (1.0 - noise.fn_rate) * 0.5 * (1.0 - noise.occlusion_conf_decay);
        conf_scale = noise.occlusion_conf_decay;
      }
      // Draw every variate regardless of the drop so streams stay aligned.
      const double u = unit(rng);
      const Box& g = obj.box_at(t);
      const double jx = gauss(rng), jy = gauss(rng), jw = gauss(rng), jh = gauss(rng);
      const double conf = conf_draw(noise.true_conf_mean, noise.true_conf_sigma) * conf_scale;
      Eigen::VectorXd f(kFeatureDim);
      for (int c = 0; c < 3; ++c) {
        f(kColorOffset + c) = obj.color_mean(c) + noise.appearance_sigma * gauss(rng);
        f(kColorVarOffset + c) = obj.color_var(c) + noise.nuisance_sigma * gauss(rng);
      }
      const Eigen::Vector3d& tex = obj.texture;
      for (int c = 0; c < 3; ++c) f(kTextureOffset + c) = tex(c) + noise.appearance_sigma * gauss(rng);
      if (noise.fn_rate >= 1.0 || u < drop) continue;
      const double s = noise.box_jitter_sigma;
      Box b{g.x + s * g.w * jx, g.y + s * g.h * jy, g.w * std::exp(s * jw), g.h * std::exp(s * jh)};
      f.segment<3>(kGeometryOffset) = geometry_features(b);
      dets.push_back(Detection{b, conf, t, 1});
      feats.push_back(std::move(f));
      ids.push_back(obj.identity);
    }
    // Poisson false positives with random boxes and random features.
    std::poisson_distribution<int> fp_count(noise.fp_rate_per_frame);
    const int fps = noise.fp_rate_per_frame > 0.0 ? fp_count(rng) : 0;
    for (int k = 0; k < fps; ++k) {
      const double w = 20.0 + 40.0 * unit(rng);
      const double h = w * (1.0 + unit(rng));
      Box b{unit(rng) * (seq.width - w), unit(rng) * (seq.height - h), w, h};
      Eigen::VectorXd f(kFeatureDim);
      for (int c = 0; c < 3; ++c) {
        f(kColorOffset + c) = unit(rng);
        f(kColorVarOffset + c) = 0.15 + noise.nuisance_sigma * gauss(rng);
        f(kTextureOffset + c) = 2.0 * unit(rng) - 1.0;
      }
      f.segment<3>(kGeometryOffset) = geometry_features(b);
      dets.push_back(Detection{b, conf_draw(noise.false_conf_mean, noise.false_conf_sigma), t, 1});
      feats.push_back(std::move(f));
      ids.push_back(-1);
    }
    // Detector output order carries no identity information.
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto& frame = out[static_cast<std::size_t>(t)];
    frame.features.resize(static_cast<Eigen::Index>(dets.size()), kFeatureDim);
    for (std::size_t r = 0; r < order.size(); ++r) {
      frame.detections.push_back(dets[order[r]]);
      frame.features.row(static_cast<Eigen::Index>(r)) = feats[order[r]].transpose();
      frame.source_identity.push_back(ids[order[r]]);
    }
  }
  return out;
}

// Frames 0, stride, 2*stride, ... carry detection annotations.
inline std::vector<bool> sparsify_annotations(const SyntheticSequence& seq, int stride) {
  if (stride < 1) throw InvalidArgument("sparsify_annotations: stride must be >= 1");
  std::vector<bool> mask(static_cast<std::size_t>(seq.length), false);
  for (int t = 0; t < seq.length; t += stride) mask[static_cast<std::size_t>(t)] = true;
  return mask;
}

}  // namespace walker
