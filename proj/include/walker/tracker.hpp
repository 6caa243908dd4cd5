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

// Inference-time association.
//
// Two association schemes share one state type:
//  * Walker: two stages in the BYTE style. High-confidence detections are
//    matched to tracklets on a cost that fuses Kalman-predicted IoU with the
//    biwalk appearance similarity; low-confidence detections then pick up
//    the remaining tracklets on IoU alone.
//  * QD-Walker: appearance only. Each detection takes its best candidate
//    among tracklets and recent backdrops (unmatched, low-score detections).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"
#include "walker/hungarian.hpp"
#include "walker/kalman.hpp"
#include "walker/toag.hpp"

namespace walker {

enum class SimilarityMetric { kCosine, kBisoftmax, kBiwalk };
enum class TrackerMode { kWalker, kQdWalker };

struct TrackerConfig {
  double beta_high = 0.6;
  double beta_low = 0.1;
  double beta_new = 0.8;
  double beta_match_high = 0.1;
  double beta_match_low = 0.5;
  double beta_biwalk = 0.2;
  double beta_iou = 0.5;
  double lambda_biwalk = 2.0;
  double beta_cycle_inf = 0.1;
  double tau_inf = 0.07;
  int max_inactive = 20;  // K
  double ema_momentum = 0.8;  // m
  int backdrop_frames = 1;  // L
  SimilarityMetric metric = SimilarityMetric::kBiwalk;
  TrackerMode mode = TrackerMode::kWalker;
  bool interpolate = false;
  int interpolation_max_gap = 20;
  // Appearance-only (QD-Walker) scheme.
  double beta_match = 0.5;
  double beta_obj = 0.3;
  double det_conf_thr = 0.1;
  double det_nms_iou = 0.6;
  // When false, the first Walker stage matches on IoU distance alone.
  bool appearance = true;
  KalmanParams kalman{};

  void validate() const {
    for (double v : {beta_high, beta_low, beta_new, beta_match_high, beta_match_low, beta_biwalk,
                     beta_iou, beta_cycle_inf, ema_momentum, beta_match, beta_obj, det_conf_thr,
                     det_nms_iou}) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("TrackerConfig: thresholds must lie in [0, 1]");
    }
    if (beta_low > beta_high) throw InvalidArgument("TrackerConfig: beta_low > beta_high");
    if (!(tau_inf > 0.0)) throw InvalidArgument("TrackerConfig: tau_inf must be > 0");
    if (!(lambda_biwalk >= 0.0)) throw InvalidArgument("TrackerConfig: lambda_biwalk must be >= 0");
    if (max_inactive < 0 || backdrop_frames < 0 || interpolation_max_gap < 0) {
      throw InvalidArgument("TrackerConfig: frame counts must be >= 0");
    }
  }
};

enum class TrackState { kActive, kInactive, kRemoved };

struct Tracklet {
  int track_id = 0;
  KalmanState kalman;
  Eigen::VectorXd embedding;  // unit length
  Box last_box;
  double last_confidence = 0.0;
  TrackState state = TrackState::kActive;
  int frames_since_update = 0;
  std::vector<std::pair<int, Box>> history;
};

struct Backdrop {
  Eigen::VectorXd embedding;
  Box box;
  int frame = 0;
};

struct TrackerState {
  std::vector<Tracklet> tracklets;
  std::vector<Backdrop> backdrops;
  int next_id = 1;
  int frame_cursor = -1;
};

struct TrackOutput {
  int frame = 0;
  int track_id = 0;
  Box box;
  double confidence = 0.0;

  friend bool operator==(const TrackOutput&, const TrackOutput&) = default;
};

// --------------------------------------------------------------------------
// Appearance similarity

// Pre-gate biwalk scores: s(i,j) = A_NM(i,j) A_MN(j,i) / C_i with
// C_i = sum_m A_NM(i,m) A_MN(m,i), the probability that the cycle walk from
// detection i returns to i. The gate compares C_i with beta_cycle.
struct BiwalkScores {
  Eigen::MatrixXd scores;       // N x M, rows sum to 1
  Eigen::VectorXd return_prob;  // C_i
};

inline BiwalkScores biwalk_scores(const EmbeddingMatrix& dets, const EmbeddingMatrix& cands,
                                  double tau) {
  BiwalkScores b;
  b.scores = Eigen::MatrixXd::Zero(dets.rows(), cands.rows());
  b.return_prob = Eigen::VectorXd::Zero(dets.rows());
  if (dets.rows() == 0 || cands.rows() == 0) return b;
  const Eigen::MatrixXd nm = transition_from_cosines(cosine_matrix(dets, cands), tau).probs;
  const Eigen::MatrixXd mn = transition_from_cosines(cosine_matrix(cands, dets), tau).probs;
  for (Eigen::Index i = 0; i < dets.rows(); ++i) {
    double c = 0.0;
    for (Eigen::Index j = 0; j < cands.rows(); ++j) {
      b.scores(i, j) = nm(i, j) * mn(j, i);
      c += b.scores(i, j);
    }
    b.return_prob(i) = c;
    if (c > 0.0) b.scores.row(i) /= c;
  }
  return b;
}

inline Eigen::MatrixXd appearance_similarity(const EmbeddingMatrix& det_embeds,
                                             const EmbeddingMatrix& cand_embeds,
                                             const TrackerConfig& cfg) {
  const Eigen::Index n = det_embeds.rows();
  const Eigen::Index m = cand_embeds.rows();
  if (n == 0 || m == 0) return Eigen::MatrixXd::Zero(n, m);
  if (det_embeds.cols() != cand_embeds.cols()) {
    throw InvalidArgument("appearance_similarity: embedding dimension mismatch");
  }
  switch (cfg.metric) {
    case SimilarityMetric::kCosine:
      return (cosine_matrix(det_embeds, cand_embeds).array() + 1.0) * 0.5;
    case SimilarityMetric::kBisoftmax: {
      const Eigen::MatrixXd logits = cosine_matrix(det_embeds, cand_embeds) / cfg.tau_inf;
      const Eigen::MatrixXd rows = softmax_rows(logits);
      const Eigen::MatrixXd cols = softmax_rows(logits.transpose()).transpose();
      return 0.5 * (rows + cols);
    }
    case SimilarityMetric::kBiwalk: {
      BiwalkScores b = biwalk_scores(det_embeds, cand_embeds, cfg.tau_inf);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (b.return_prob(i) < cfg.beta_cycle_inf) b.scores.row(i).setZero();
      }
      return b.scores;
    }
  }
  return Eigen::MatrixXd::Zero(n, m);
}

inline Eigen::MatrixXd iou_distance(std::span<const Box> dets, std::span<const Box> cands) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(cands.size()));
  for (std::size_t i = 0; i < dets.size(); ++i)
    for (std::size_t j = 0; j < cands.size(); ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - iou(dets[i], cands[j]);
  return d;
}

// W = min(lambda * d_hat, d_iou), where d_hat keeps the appearance distance
// only for pairs that are both close (d_iou < beta_iou) and similar
// (d_app < beta_biwalk) and is 1 otherwise.
inline Eigen::MatrixXd fused_cost(const Eigen::MatrixXd& sim, std::span<const Box> det_boxes,
                                  std::span<const Box> cand_predicted_boxes,
                                  const TrackerConfig& cfg) {
  if (sim.rows() != static_cast<Eigen::Index>(det_boxes.size()) ||
      sim.cols() != static_cast<Eigen::Index>(cand_predicted_boxes.size())) {
    throw InvalidArgument("fused_cost: shape mismatch");
  }
  const Eigen::MatrixXd d_iou = iou_distance(det_boxes, cand_predicted_boxes);
  Eigen::MatrixXd w(sim.rows(), sim.cols());
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      const double d_app = 1.0 - sim(i, j);
      const double d_hat = (d_iou(i, j) < cfg.beta_iou && d_app < cfg.beta_biwalk) ? d_app : 1.0;
      w(i, j) = std::min(cfg.lambda_biwalk * d_hat, d_iou(i, j));
    }
  }
  return w;
}

// --------------------------------------------------------------------------
// Track management

namespace detail {

inline Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  return n > 1e-12 ? Eigen::VectorXd(v / n) : v;
}

inline EmbeddingMatrix stack_rows(const std::vector<const Eigen::VectorXd*>& rows, Eigen::Index dim) {
  EmbeddingMatrix m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rows[r]->transpose();
  return m;
}

inline void check_frame(TrackerState& state, int frame, const std::vector<Detection>& dets,
                        const EmbeddingMatrix& embeds) {
  if (frame <= state.frame_cursor || (state.frame_cursor >= 0 && frame != state.frame_cursor + 1)) {
    throw InvalidArgument("tracker: out-of-order frame " + std::to_string(frame) + " after " +
                          std::to_string(state.frame_cursor));
  }
  if (embeds.rows() != static_cast<Eigen::Index>(dets.size())) {
    throw InvalidArgument("tracker: embedding rows do not match detections");
  }
  for (const auto& d : dets) {
    if (d.frame != frame) throw InvalidArgument("tracker: detection from another frame");
    require_valid(d.box);
  }
}

inline void blend_embedding(Tracklet& t, const Eigen::VectorXd& e, double momentum) {
  const Eigen::VectorXd fresh = unit(e);
  t.embedding = t.embedding.size() == fresh.size()
                    ? unit(momentum * t.embedding + (1.0 - momentum) * fresh)
                    : fresh;
}

// Tracklets that missed this frame age; those past K are dropped for good.
inline void age_unmatched(TrackerState& state, const std::vector<char>& updated, int max_inactive) {
  for (std::size_t k = 0; k < state.tracklets.size(); ++k) {
    auto& t = state.tracklets[k];
    if (t.state == TrackState::kRemoved || updated[k]) continue;
    ++t.frames_since_update;
    t.state = t.frames_since_update > max_inactive ? TrackState::kRemoved : TrackState::kInactive;
  }
}

inline Tracklet new_tracklet(TrackerState& state, const Detection& d, const Eigen::VectorXd& e,
                             const KalmanParams& kp) {
  Tracklet t;
  t.track_id = state.next_id++;
  t.kalman = kalman_initiate(d.box, kp);
  t.embedding = unit(e);
  t.last_box = d.box;
  t.last_confidence = d.confidence;
  t.history.emplace_back(d.frame, d.box);
  return t;
}

}  // namespace detail

// Greedy duplicate removal by descending confidence.
inline std::vector<std::size_t> remove_duplicates(std::span<const Detection> dets, double conf_thr,
                                                  double nms_iou) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].confidence >= conf_thr) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(dets[i].box, dets[k].box) > nms_iou;
    });
    if (!dup) kept.push_back(i);
  }
  return kept;
}

inline std::vector<TrackOutput> associate_walker(TrackerState& state, int frame,
                                                 const std::vector<Detection>& detections,
                                                 const EmbeddingMatrix& embeddings,
                                                 const TrackerConfig& cfg) {
  cfg.validate();
  detail::check_frame(state, frame, detections, embeddings);
  state.frame_cursor = frame;

  std::vector<std::size_t> high, low;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].confidence >= cfg.beta_high) {
      high.push_back(i);
    } else if (detections[i].confidence >= cfg.beta_low) {
      low.push_back(i);
    }
  }

  std::vector<std::size_t> cands;
  for (std::size_t k = 0; k < state.tracklets.size(); ++k) {
    auto& t = state.tracklets[k];
    if (t.state == TrackState::kRemoved) continue;
    t.kalman = kalman_predict(t.kalman, cfg.kalman);
    cands.push_back(k);
  }

  std::vector<char> updated(state.tracklets.size(), 0);
  auto apply_match = [&](std::size_t track_idx, std::size_t det_idx) {
    auto& t = state.tracklets[track_idx];
    const Detection& d = detections[det_idx];
    t.kalman = kalman_update(t.kalman, d.box, cfg.kalman);
    detail::blend_embedding(t, embeddings.row(static_cast<Eigen::Index>(det_idx)).transpose(),
                            cfg.ema_momentum);
    t.last_box = d.box;
    t.last_confidence = d.confidence;
    t.state = TrackState::kActive;
    t.frames_since_update = 0;
    t.history.emplace_back(frame, t.kalman.box());
    updated[track_idx] = 1;
  };

  // Stage 1: high-confidence detections vs every live tracklet.
  std::vector<std::size_t> remaining_cands;
  std::vector<std::size_t> remaining_high;
  {
    std::vector<Box> det_boxes, cand_boxes;
    for (std::size_t i : high) det_boxes.push_back(detections[i].box);
    for (std::size_t k : cands) cand_boxes.push_back(state.tracklets[k].kalman.box());
    Eigen::MatrixXd cost;
    if (cfg.appearance && !high.empty() && !cands.empty()) {
      EmbeddingMatrix de(static_cast<Eigen::Index>(high.size()), embeddings.cols());
      for (std::size_t r = 0; r < high.size(); ++r)
        de.row(static_cast<Eigen::Index>(r)) = embeddings.row(static_cast<Eigen::Index>(high[r]));
      std::vector<const Eigen::VectorXd*> rows;
      for (std::size_t k : cands) rows.push_back(&state.tracklets[k].embedding);
      const EmbeddingMatrix ce = detail::stack_rows(rows, embeddings.cols());
      cost = fused_cost(appearance_similarity(de, ce, cfg), det_boxes, cand_boxes, cfg);
    } else {
      cost = iou_distance(det_boxes, cand_boxes);
    }
    const AssignmentResult r = gated_assignment(cost, 1.0 - cfg.beta_match_high);
    for (const auto& [i, j] : r.matches) apply_match(cands[j], high[i]);
    for (int i : r.unmatched_rows) remaining_high.push_back(high[i]);
    for (int j : r.unmatched_cols) remaining_cands.push_back(cands[j]);
  }

  // Stage 2: low-confidence detections vs what is left, IoU only.
  {
    std::vector<Box> det_boxes, cand_boxes;
    for (std::size_t i : low) det_boxes.push_back(detections[i].box);
    for (std::size_t k : remaining_cands) cand_boxes.push_back(state.tracklets[k].kalman.box());
    const AssignmentResult r = gated_assignment(iou_distance(det_boxes, cand_boxes), cfg.beta_match_low);
    for (const auto& [i, j] : r.matches) apply_match(remaining_cands[j], low[i]);
  }

  detail::age_unmatched(state, updated, cfg.max_inactive);

  for (std::size_t i : remaining_high) {
    state.tracklets.push_back(detail::new_tracklet(
        state, detections[i], embeddings.row(static_cast<Eigen::Index>(i)).transpose(), cfg.kalman));
    updated.push_back(1);
  }

  std::vector<TrackOutput> out;
  for (std::size_t k = 0; k < state.tracklets.size(); ++k) {
    if (!updated[k]) continue;
    const auto& t = state.tracklets[k];
    out.push_back(TrackOutput{frame, t.track_id, t.history.back().second, t.last_confidence});
  }
  return out;
}

inline std::vector<TrackOutput> associate_qd_walker(TrackerState& state, int frame,
                                                    const std::vector<Detection>& detections,
                                                    const EmbeddingMatrix& embeddings,
                                                    const TrackerConfig& cfg) {
  cfg.validate();
  detail::check_frame(state, frame, detections, embeddings);
  state.frame_cursor = frame;

  // Backdrops older than L frames are no longer candidates.
  std::erase_if(state.backdrops,
                [&](const Backdrop& b) { return b.frame < frame - cfg.backdrop_frames; });

  const std::vector<std::size_t> dets =
      remove_duplicates(detections, cfg.det_conf_thr, cfg.det_nms_iou);

  std::vector<std::size_t> tracks;
  std::vector<const Eigen::VectorXd*> rows;
  for (std::size_t k = 0; k < state.tracklets.size(); ++k) {
    if (state.tracklets[k].state == TrackState::kRemoved) continue;
    tracks.push_back(k);
    rows.push_back(&state.tracklets[k].embedding);
  }
  for (const auto& b : state.backdrops) rows.push_back(&b.embedding);
  const EmbeddingMatrix cand = detail::stack_rows(rows, embeddings.cols());
  EmbeddingMatrix de(static_cast<Eigen::Index>(dets.size()), embeddings.cols());
  for (std::size_t r = 0; r < dets.size(); ++r)
    de.row(static_cast<Eigen::Index>(r)) = embeddings.row(static_cast<Eigen::Index>(dets[r]));
  Eigen::MatrixXd scores = appearance_similarity(de, cand, cfg);

  std::vector<char> updated(state.tracklets.size(), 0);
  std::vector<std::size_t> births;
  std::vector<Backdrop> fresh_backdrops;
  for (std::size_t r = 0; r < dets.size(); ++r) {
    const std::size_t i = dets[r];
    const Detection& d = detections[i];
    const Eigen::VectorXd e = embeddings.row(static_cast<Eigen::Index>(i)).transpose();
    double best = 0.0;
    Eigen::Index j = -1;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (j < 0 || scores(static_cast<Eigen::Index>(r), c) > best) {
        best = scores(static_cast<Eigen::Index>(r), c);
        j = c;
      }
    }
    const bool matched = j >= 0 && best > cfg.beta_match && d.confidence > cfg.beta_obj;
    if (matched && j < static_cast<Eigen::Index>(tracks.size())) {
      auto& t = state.tracklets[tracks[static_cast<std::size_t>(j)]];
      t.kalman = kalman_initiate(d.box, cfg.kalman);
      detail::blend_embedding(t, e, cfg.ema_momentum);
      t.last_box = d.box;
      t.last_confidence = d.confidence;
      t.state = TrackState::kActive;
      t.frames_since_update = 0;
      t.history.emplace_back(frame, d.box);
      updated[tracks[static_cast<std::size_t>(j)]] = 1;
      // A track takes at most one detection per frame.
      scores.col(j).setZero();
    } else if (matched) {
      // Consumed by a backdrop: neither a track update nor a new track.
    } else if (d.confidence > cfg.beta_new) {
      births.push_back(i);
    } else {
      fresh_backdrops.push_back(Backdrop{detail::unit(e), d.box, frame});
    }
  }

  detail::age_unmatched(state, updated, cfg.max_inactive);
  for (std::size_t i : births) {
    state.tracklets.push_back(detail::new_tracklet(
        state, detections[i], embeddings.row(static_cast<Eigen::Index>(i)).transpose(), cfg.kalman));
    updated.push_back(1);
  }
  for (auto& b : fresh_backdrops) state.backdrops.push_back(std::move(b));

  std::vector<TrackOutput> out;
  for (std::size_t k = 0; k < state.tracklets.size(); ++k) {
    if (!updated[k]) continue;
    const auto& t = state.tracklets[k];
    out.push_back(TrackOutput{frame, t.track_id, t.last_box, t.last_confidence});
  }
  return out;
}

// Fills gaps of at most max_gap missing frames inside each track by linear
// interpolation of x, y, w, h (and confidence). Input order is irrelevant;
// output is sorted by (frame, track_id).
inline std::vector<TrackOutput> interpolate_tracks(std::span<const TrackOutput> tracks, int max_gap) {
  std::map<int, std::vector<TrackOutput>> by_id;
  for (const auto& t : tracks) by_id[t.track_id].push_back(t);
  std::vector<TrackOutput> out;
  for (auto& [id, hist] : by_id) {
    std::sort(hist.begin(), hist.end(),
              [](const TrackOutput& a, const TrackOutput& b) { return a.frame < b.frame; });
    for (std::size_t k = 0; k < hist.size(); ++k) {
      if (k > 0 && hist[k].frame <= hist[k - 1].frame) {
        throw InvalidArgument("interpolate_tracks: frames must be strictly increasing per track");
      }
      out.push_back(hist[k]);
      if (k + 1 == hist.size()) break;
      const TrackOutput& a = hist[k];
      const TrackOutput& b = hist[k + 1];
      const int gap = b.frame - a.frame - 1;
      if (gap < 1 || gap > max_gap) continue;
      for (int f = a.frame + 1; f < b.frame; ++f) {
        const double s = static_cast<double>(f - a.frame) / static_cast<double>(b.frame - a.frame);
        auto lerp = [s](double u, double v) { return u + s * (v - u); };
        out.push_back(TrackOutput{f, id,
                                  Box{lerp(a.box.x, b.box.x), lerp(a.box.y, b.box.y),
                                      lerp(a.box.w, b.box.w), lerp(a.box.h, b.box.h)},
                                  lerp(a.confidence, b.confidence)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const TrackOutput& a, const TrackOutput& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.track_id < b.track_id;
  });
  return out;
}

// Detections and embeddings of one frame.
struct FrameInput {
  int frame = 0;
  std::vector<Detection> detections;
  EmbeddingMatrix embeddings;
};

// Runs the configured scheme over consecutive frames (0-based, no gaps).
inline std::vector<TrackOutput> track_sequence(std::span<const FrameInput> frames,
                                               const TrackerConfig& cfg) {
  TrackerState state;
  std::vector<TrackOutput> out;
  for (const auto& f : frames) {
    auto step = cfg.mode == TrackerMode::kWalker
                    ? associate_walker(state, f.frame, f.detections, f.embeddings, cfg)
                    : associate_qd_walker(state, f.frame, f.detections, f.embeddings, cfg);
    out.insert(out.end(), step.begin(), step.end());
  }
  if (cfg.interpolate) return interpolate_tracks(out, cfg.interpolation_max_gap);
  std::sort(out.begin(), out.end(), [](const TrackOutput& a, const TrackOutput& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.track_id < b.track_id;
  });
  return out;
}

}  // namespace walker
