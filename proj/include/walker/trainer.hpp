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

// Desk-scale self-supervised training of a linear embedder on cycle walks
// between an annotated key frame and a nearby, possibly unlabeled, frame.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"
#include "walker/losses.hpp"
#include "walker/synth.hpp"
#include "walker/text.hpp"
#include "walker/toag.hpp"

namespace walker {

// embeddings = features * weights + bias
struct EmbedderModel {
  Eigen::MatrixXd weights;  // feature_dim x embed_dim
  Eigen::RowVectorXd bias;  // embed_dim

  Eigen::Index feature_dim() const { return weights.rows(); }
  Eigen::Index embed_dim() const { return weights.cols(); }

  static EmbedderModel random(int feature_dim, int embed_dim, std::uint64_t seed) {
    if (feature_dim < 1 || embed_dim < 2) throw InvalidArgument("EmbedderModel: bad dimensions");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(feature_dim)));
    EmbedderModel m;
    m.weights.resize(feature_dim, embed_dim);
    for (Eigen::Index i = 0; i < m.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < m.weights.cols(); ++j) m.weights(i, j) = gauss(rng);
    m.bias.resize(embed_dim);
    for (Eigen::Index j = 0; j < m.bias.size(); ++j) m.bias(j) = gauss(rng);
    return m;
  }

  friend bool operator==(const EmbedderModel& a, const EmbedderModel& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

inline EmbeddingMatrix embed(const Eigen::MatrixXd& features, const EmbedderModel& model) {
  if (features.cols() != model.feature_dim()) {
    throw InvalidArgument("embed: feature dimension " + std::to_string(features.cols()) +
                          " does not match model input " + std::to_string(model.feature_dim()));
  }
  EmbeddingMatrix e = features * model.weights;
  e.rowwise() += model.bias;
  return e;
}

// Plain-text model file: "rows cols", one weight row per line, one bias line.
inline std::string serialize_model(const EmbedderModel& m) {
  std::ostringstream os;
  os << m.weights.rows() << ' ' << m.weights.cols() << '\n';
  for (Eigen::Index i = 0; i < m.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.weights.cols(); ++j) {
      if (j) os << ' ';
      os << text::format_double(m.weights(i, j));
    }
    os << '\n';
  }
  for (Eigen::Index j = 0; j < m.bias.size(); ++j) {
    if (j) os << ' ';
    os << text::format_double(m.bias(j));
  }
  os << '\n';
  return os.str();
}

inline EmbedderModel parse_model(const std::string& content) {
  std::istringstream is(content);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(is, line)) throw ParseError(std::string("model file: missing ") + what);
    return text::split_ws(line);
  };
  const auto header = next_line("header");
  if (header.size() != 2) throw ParseError("model file: header must be 'rows cols'");
  const auto rows = text::parse_int(header[0]);
  const auto cols = text::parse_int(header[1]);
  if (rows < 1 || cols < 2) throw ParseError("model file: bad dimensions");
  EmbedderModel m;
  m.weights.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto fields = next_line("weight row");
    if (static_cast<long long>(fields.size()) != cols) {
      throw ParseError("model file: weight row " + std::to_string(i + 1) + " has wrong length");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m.weights(i, j) = text::parse_double(fields[j]);
  }
  const auto bias = next_line("bias row");
  if (static_cast<long long>(bias.size()) != cols) throw ParseError("model file: bias has wrong length");
  m.bias.resize(cols);
  for (Eigen::Index j = 0; j < cols; ++j) m.bias(j) = text::parse_double(bias[j]);
  return m;
}

inline void save_model(const std::string& path, const EmbedderModel& m) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write model file " + path);
  f << serialize_model(m);
}

inline EmbedderModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read model file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_model(ss.str());
}

enum class AnnotationSetting { kDense, kSparse };

struct TrainConfig {
  int k_hat = 10;
  double alpha1 = 0.7;
  double alpha2 = 0.3;
  double beta_obj = 0.3;
  double beta_cycle = 0.8;
  double tau = 0.05;
  double gamma1 = 1.0;
  double gamma2 = 2.0;
  int neg_ratio = 3;
  int max_pos_nodes = 128;
  double learning_rate = 0.05;
  int epochs = 20;
  AnnotationSetting setting = AnnotationSetting::kSparse;
  int annotation_stride = 10;
  std::uint64_t seed = 0;
  int embed_dim = 16;
  int proposals_per_detection = 4;
  double proposal_jitter = 0.15;
  double proposal_feature_sigma = 0.02;
  TargetPolicy targets = TargetPolicy::kMultiPositive;

  void validate() const {
    if (!(alpha2 > 0.0 && alpha2 < alpha1 && alpha1 <= 1.0)) {
      throw InvalidArgument("TrainConfig: need 0 < alpha2 < alpha1 <= 1");
    }
    if (!(tau > 0.0)) throw InvalidArgument("TrainConfig: tau must be > 0");
    if (k_hat < 1) throw InvalidArgument("TrainConfig: k_hat must be >= 1");
    if (neg_ratio < 1 || max_pos_nodes < 1) throw InvalidArgument("TrainConfig: bad node budget");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("TrainConfig: learning_rate must be >= 0");
    if (epochs < 0) throw InvalidArgument("TrainConfig: epochs must be >= 0");
    if (annotation_stride < 1) throw InvalidArgument("TrainConfig: annotation_stride must be >= 1");
    if (embed_dim < 2) throw InvalidArgument("TrainConfig: embed_dim must be >= 2");
    if (proposals_per_detection < 0 || proposal_jitter < 0.0 || proposal_feature_sigma < 0.0) {
      throw InvalidArgument("TrainConfig: bad proposal settings");
    }
    if (!(beta_obj >= 0.0 && beta_obj <= 1.0 && beta_cycle >= 0.0 && beta_cycle <= 1.0)) {
      throw InvalidArgument("TrainConfig: thresholds must lie in [0, 1]");
    }
  }

  WalkConfig walk() const {
    WalkConfig w;
    w.graph.tau = tau;
    w.alpha1 = alpha1;
    w.beta_cycle = beta_cycle;
    w.gamma1 = gamma1;
    w.gamma2 = gamma2;
    w.neg_ratio = neg_ratio;
    w.targets = targets;
    return w;
  }
};

// Identity-free view of a sequence: everything training may look at.
struct TrainingFrame {
  std::vector<Detection> detections;
  Eigen::MatrixXd features;       // one row per detection
  std::vector<Box> ground_truth;  // boxes only; meaningful on annotated frames
};

struct TrainingSequence {
  std::vector<TrainingFrame> frames;
  std::vector<bool> annotated;

  int length() const { return static_cast<int>(frames.size()); }
};

// Drops identities; unannotated frames keep no ground truth at all.
inline TrainingSequence make_training_sequence(const SyntheticSequence& seq,
                                               const SimulatedDetections& dets, int stride) {
  if (static_cast<int>(dets.size()) != seq.length) {
    throw InvalidArgument("make_training_sequence: detections do not cover the sequence");
  }
  TrainingSequence ts;
  ts.annotated = sparsify_annotations(seq, stride);
  ts.frames.resize(static_cast<std::size_t>(seq.length));
  for (int t = 0; t < seq.length; ++t) {
    auto& f = ts.frames[static_cast<std::size_t>(t)];
    f.detections = dets[static_cast<std::size_t>(t)].detections;
    f.features = dets[static_cast<std::size_t>(t)].features;
    if (!ts.annotated[static_cast<std::size_t>(t)]) continue;
    for (const auto& obj : seq.objects) {
      if (obj.alive(t)) f.ground_truth.push_back(obj.box_at(t));
    }
  }
  return ts;
}

struct FramePair {
  int key = 0;
  int ref = 0;
  int offset = 0;
};

// Offset drawn uniformly among the valid ones in [-k_hat, k_hat] \ {0}.
inline FramePair sample_frame_pair(int length, int t_key, int k_hat, std::mt19937_64& rng) {
  if (t_key < 0 || t_key >= length) throw InvalidArgument("sample_frame_pair: key frame out of range");
  std::vector<int> offsets;
  for (int k = -k_hat; k <= k_hat; ++k) {
    if (k != 0 && t_key + k >= 0 && t_key + k < length) offsets.push_back(k);
  }
  if (offsets.empty()) throw InvalidArgument("sample_frame_pair: sequence too short for any offset");
  std::uniform_int_distribution<std::size_t> pick(0, offsets.size() - 1);
  const int k = offsets[pick(rng)];
  return FramePair{t_key, t_key + k, k};
}

inline FramePair sample_frame_pair(const TrainingSequence& seq, int t_key, const TrainConfig& cfg,
                                   std::mt19937_64& rng) {
  if (t_key < 0 || t_key >= seq.length() || !seq.annotated[static_cast<std::size_t>(t_key)]) {
    throw InvalidArgument("sample_frame_pair: key frame " + std::to_string(t_key) +
                          " carries no annotation");
  }
  return sample_frame_pair(seq.length(), t_key, cfg.k_hat, rng);
}

// Walk nodes of one frame before embedding; positives come first.
struct NodeSelection {
  std::vector<Box> boxes;
  Eigen::MatrixXd features;
  std::size_t positive_count = 0;

  std::size_t size() const { return boxes.size(); }
  bool has_positives() const { return positive_count > 0; }
};

// Proposal pool: every detection plus jittered copies (no region proposal
// network here). A proposal is positive when its best IoU against the
// reference boxes reaches alpha1, negative below alpha2, otherwise dropped.
inline NodeSelection select_nodes(std::span<const Detection> detections,
                                  const Eigen::MatrixXd& features,
                                  std::span<const Box> reference_boxes, const TrainConfig& cfg,
                                  std::mt19937_64& rng) {
  if (static_cast<Eigen::Index>(detections.size()) != features.rows()) {
    throw InvalidArgument("select_nodes: feature rows do not match detections");
  }
  std::uniform_real_distribution<double> jitter(-cfg.proposal_jitter, cfg.proposal_jitter);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Box> boxes;
  std::vector<Eigen::VectorXd> feats;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const Box& b = detections[d].box;
    const Eigen::VectorXd f = features.row(static_cast<Eigen::Index>(d)).transpose();
    boxes.push_back(b);
    feats.push_back(f);
    for (int p = 0; p < cfg.proposals_per_detection; ++p) {
      Box j{b.x + jitter(rng) * b.w, b.y + jitter(rng) * b.h, b.w * (1.0 + jitter(rng)),
            b.h * (1.0 + jitter(rng))};
      Eigen::VectorXd g = f;
      for (Eigen::Index c = 0; c < g.size(); ++c) g(c) += cfg.proposal_feature_sigma * gauss(rng);
      if (g.size() == kFeatureDim) g.segment<3>(kGeometryOffset) = geometry_features(j);
      boxes.push_back(j);
      feats.push_back(std::move(g));
    }
  }

  std::vector<std::size_t> pos, neg;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    double best = 0.0;
    for (const auto& r : reference_boxes) best = std::max(best, iou(boxes[k], r));
    if (best >= cfg.alpha1) {
      pos.push_back(k);
    } else if (best < cfg.alpha2) {
      neg.push_back(k);
    }
  }
  // Uniform subsample without replacement, original order kept.
  auto keep = [&](std::vector<std::size_t>& idx, std::size_t cap) {
    if (idx.size() <= cap) return;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  };
  keep(pos, static_cast<std::size_t>(cfg.max_pos_nodes));
  keep(neg, pos.size() * static_cast<std::size_t>(cfg.neg_ratio));

  NodeSelection sel;
  sel.positive_count = pos.size();
  const Eigen::Index dim = features.cols();
  sel.features.resize(static_cast<Eigen::Index>(pos.size() + neg.size()), dim);
  Eigen::Index row = 0;
  for (const auto* group : {&pos, &neg}) {
    for (std::size_t k : *group) {
      sel.boxes.push_back(boxes[k]);
      sel.features.row(row++) = feats[k].transpose();
    }
  }
  return sel;
}

inline NodeSet to_node_set(const NodeSelection& sel, const EmbedderModel& model) {
  NodeSet n;
  n.boxes = sel.boxes;
  n.embeddings = embed(sel.features, model);
  n.positive_count = sel.positive_count;
  return n;
}

struct StepResult {
  EmbedderModel model;
  LossReport report;
  Eigen::MatrixXd grad_weights;
  Eigen::RowVectorXd grad_bias;
};

// Loss and gradient w.r.t. the embedder parameters for one frame pair.
inline StepResult loss_and_gradient(const NodeSelection& key, const NodeSelection& ref,
                                    const EmbedderModel& model, const TrainConfig& cfg,
                                    std::uint64_t seed,
                                    const ForwardAssignment* frozen = nullptr) {
  if (!key.has_positives()) throw InvalidArgument("train_step: key frame has no positive nodes");
  const WalkResult w =
      walk_loss(to_node_set(key, model), to_node_set(ref, model), cfg.walk(), seed, frozen);
  StepResult s;
  s.model = model;
  s.report = w.report;
  s.grad_weights = key.features.transpose() * w.report.grad_embeddings_key +
                   ref.features.transpose() * w.report.grad_embeddings_ref;
  s.grad_bias = w.report.grad_embeddings_key.colwise().sum() +
                w.report.grad_embeddings_ref.colwise().sum();
  return s;
}

// One gradient-descent update on L_total.
inline StepResult train_step(const NodeSelection& key, const NodeSelection& ref,
                             const EmbedderModel& model, const TrainConfig& cfg, std::uint64_t seed) {
  StepResult s = loss_and_gradient(key, ref, model, cfg, seed);
  if (!s.report.finite() || !s.grad_weights.allFinite()) {
    throw Error("train_step: non-finite loss or gradient");
  }
  s.model.weights -= cfg.learning_rate * s.grad_weights;
  s.model.bias -= cfg.learning_rate * s.grad_bias;
  return s;
}

struct TrainResult {
  EmbedderModel model;
  std::vector<double> history;  // mean L_total per epoch
};

inline EmbedderModel initial_model(const TrainConfig& cfg) {
  return EmbedderModel::random(kFeatureDim, cfg.embed_dim, derive_seed(cfg.seed, 0x1417));
}

// Reference boxes for node labeling: ground truth in the dense setting,
// confident detections in the sparse one.
inline std::vector<Box> reference_boxes(const TrainingFrame& frame, const TrainConfig& cfg) {
  if (cfg.setting == AnnotationSetting::kDense) return frame.ground_truth;
  std::vector<Box> out;
  for (const auto& d : frame.detections) {
    if (d.confidence >= cfg.beta_obj) out.push_back(d.box);
  }
  return out;
}

inline TrainResult train(std::span<const TrainingSequence> dataset, const TrainConfig& cfg,
                         std::optional<EmbedderModel> init = std::nullopt) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  TrainResult r;
  r.model = init ? *init : initial_model(cfg);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      const auto& seq = dataset[s];
      for (int t = 0; t < seq.length(); ++t) {
        if (!seq.annotated[static_cast<std::size_t>(t)]) continue;
        const std::uint64_t step_seed =
            derive_seed(cfg.seed, (static_cast<std::uint64_t>(epoch) << 40) ^
                                      (static_cast<std::uint64_t>(s) << 20) ^
                                      static_cast<std::uint64_t>(t));
        std::mt19937_64 rng(step_seed);
        const FramePair pair = sample_frame_pair(seq, t, cfg, rng);
        const auto& kf = seq.frames[static_cast<std::size_t>(pair.key)];
        const auto& rf = seq.frames[static_cast<std::size_t>(pair.ref)];
        const NodeSelection key = select_nodes(kf.detections, kf.features, reference_boxes(kf, cfg), cfg, rng);
        const NodeSelection ref = select_nodes(rf.detections, rf.features, reference_boxes(rf, cfg), cfg, rng);
        if (!key.has_positives() || ref.size() == 0) continue;
        StepResult step;
        try {
          step = train_step(key, ref, r.model, cfg, splitmix64(step_seed));
        } catch (const Error& e) {
          throw Error(std::string(e.what()) + " (sequence " + std::to_string(s) + ", frames " +
                      std::to_string(pair.key) + " -> " + std::to_string(pair.ref) + ")");
        }
        r.model = std::move(step.model);
        sum += step.report.total;
        ++steps;
      }
    }
    r.history.push_back(steps ? sum / static_cast<double>(steps) : 0.0);
  }
  return r;
}

}  // namespace walker
