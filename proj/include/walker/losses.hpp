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

// Self-supervision objectives on a key -> reference -> key cycle walk:
// multi-positive contrastive cycle loss, cluster-wise mutually exclusive
// forward assignment with its L2 loss, and their weighted total with
// reverse-mode gradients down to both frames' embeddings.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"
#include "walker/toag.hpp"

namespace walker {

enum class TargetPolicy {
  kMultiPositive,   // Y+ = IoU cluster of the start node
  kSinglePositive,  // Y+ = {start node}
};

// Row i describes the walk starting at positive node i.
struct TargetSets {
  std::vector<Cluster> positives;
  std::vector<std::vector<std::size_t>> negatives;

  std::size_t size() const { return positives.size(); }
};

inline TargetSets build_targets(const NodeSet& key_nodes, double alpha1,
                                TargetPolicy policy = TargetPolicy::kMultiPositive) {
  TargetSets t;
  const std::size_t n = key_nodes.size();
  for (std::size_t i = 0; i < key_nodes.positive_count; ++i) {
    Cluster c = policy == TargetPolicy::kMultiPositive
                    ? cluster_of(i, key_nodes.boxes, alpha1)
                    : Cluster{i, {i}};
    std::vector<std::size_t> neg;
    neg.reserve(n - c.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!c.contains(j)) neg.push_back(j);
    }
    t.positives.push_back(std::move(c));
    t.negatives.push_back(std::move(neg));
  }
  return t;
}

// Loss value plus its gradient w.r.t. one matrix (a transition matrix here).
struct ScalarGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

// sum_i log(1 + sum_{l in Y+} sum_{j in Y-} exp(cycle(i,j) - cycle(i,l))).
// The exponent acts on probability differences as printed, so it stays in
// (-1, 1) and needs no stabilization.
inline ScalarGrad cycle_loss(const TransitionMatrix& cycle, const TargetSets& targets) {
  if (static_cast<Eigen::Index>(targets.size()) > cycle.src()) {
    throw InvalidArgument("cycle_loss: more target rows than cycle rows");
  }
  ScalarGrad out{0.0, Eigen::MatrixXd::Zero(cycle.src(), cycle.dst())};
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const auto& pos = targets.positives[r].members;
    const auto& neg = targets.negatives[r];
    if (neg.empty()) continue;
    // s = (sum_j e^{A_ij}) (sum_l e^{-A_il})
    double sum_neg = 0.0, sum_pos = 0.0;
    for (std::size_t j : neg) sum_neg += std::exp(cycle(i, static_cast<Eigen::Index>(j)));
    for (std::size_t l : pos) sum_pos += std::exp(-cycle(i, static_cast<Eigen::Index>(l)));
    const double s = sum_neg * sum_pos;
    out.value += std::log1p(s);
    const double scale = 1.0 / (1.0 + s);
    for (std::size_t j : neg) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.grad(i, jj) += scale * std::exp(cycle(i, jj)) * sum_pos;
    }
    for (std::size_t l : pos) {
      const auto ll = static_cast<Eigen::Index>(l);
      out.grad(i, ll) -= scale * std::exp(-cycle(i, ll)) * sum_neg;
    }
  }
  return out;
}

struct AssignedPair {
  Cluster key;     // cluster of key-frame nodes
  Cluster latent;  // matched cluster of reference-frame nodes
  double closure = 0.0;
};

struct ForwardAssignment {
  std::vector<AssignedPair> pairs;  // processing order
  std::vector<Cluster> rejected;
};

namespace detail {

inline Cluster walk_origins(const Cluster& c, Eigen::Index rows) {
  Cluster out{c.anchor, {}};
  for (std::size_t m : c.members) {
    if (static_cast<Eigen::Index>(m) < rows) out.members.push_back(m);
  }
  return out;
}

}  // namespace detail

// Greedy cluster-wise assignment of key clusters to reference clusters.
// Unique key clusters are visited by decreasing cycle-closure probability;
// those under beta_cycle are rejected. Each remaining cluster takes the most
// likely latent node (averaged over all walks inside the cluster) that is not
// already part of an assigned latent cluster, and claims the IoU cluster
// around it. A cluster left with no admissible latent node is rejected.
inline ForwardAssignment forward_assign(const TransitionMatrix& fwd, const TransitionMatrix& bwd,
                                        std::span<const Cluster> key_clusters,
                                        std::span<const Box> ref_boxes, double beta_cycle,
                                        double alpha1) {
  if (fwd.dst() != bwd.src() || static_cast<Eigen::Index>(ref_boxes.size()) != fwd.dst()) {
    throw InvalidArgument("forward_assign: shape mismatch");
  }
  const TransitionMatrix cycle = cycle_transition(fwd, bwd);

  struct Candidate {
    Cluster cluster;
    Cluster origins;
    double closure;
  };
  std::vector<Candidate> unique;
  for (const auto& c : key_clusters) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Candidate& u) {
      return u.cluster.members == c.members;
    });
    if (seen) continue;
    Cluster origins = detail::walk_origins(c, fwd.src());
    if (origins.members.empty()) continue;
    const double p = cycle_closure_probability(cycle, origins, c);
    unique.push_back({c, std::move(origins), p});
  }
  std::stable_sort(unique.begin(), unique.end(),
                   [](const Candidate& a, const Candidate& b) { return a.closure > b.closure; });

  ForwardAssignment out;
  std::vector<char> taken(static_cast<std::size_t>(fwd.dst()), 0);
  for (auto& cand : unique) {
    if (cand.closure < beta_cycle) {
      out.rejected.push_back(std::move(cand.cluster));
      continue;
    }
    const Eigen::VectorXd p = max_likelihood_distribution(fwd, bwd, cand.origins, cand.cluster);
    std::vector<std::size_t> order(static_cast<std::size_t>(p.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return p(static_cast<Eigen::Index>(a)) > p(static_cast<Eigen::Index>(b));
    });
    auto it = std::find_if(order.begin(), order.end(), [&](std::size_t j) { return !taken[j]; });
    if (it == order.end()) {
      out.rejected.push_back(std::move(cand.cluster));
      continue;
    }
    Cluster z = cluster_of(*it, ref_boxes, alpha1);
    for (std::size_t m : z.members) taken[m] = 1;
    out.pairs.push_back({std::move(cand.cluster), std::move(z), cand.closure});
  }
  return out;
}

// sum over sampled (i, j) of (fwd(i,j) - [j in Z_i])^2. For each assigned
// pair every (i in C, j in Z) is a positive; negatives (i in C, j not in Z)
// are drawn uniformly without replacement, neg_ratio per positive.
inline ScalarGrad forward_loss(const TransitionMatrix& fwd, const ForwardAssignment& assignment,
                               int neg_ratio, std::uint64_t rng_seed) {
  if (neg_ratio < 1) throw InvalidArgument("forward_loss: neg_ratio must be >= 1");
  ScalarGrad out{0.0, Eigen::MatrixXd::Zero(fwd.src(), fwd.dst())};
  std::mt19937_64 rng(rng_seed);
  auto add = [&](Eigen::Index i, Eigen::Index j, double target) {
    const double r = fwd(i, j) - target;
    out.value += r * r;
    out.grad(i, j) += 2.0 * r;
  };
  for (const auto& pair : assignment.pairs) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> negatives;
    std::size_t positives = 0;
    for (std::size_t m : pair.key.members) {
      const auto i = static_cast<Eigen::Index>(m);
      if (i >= fwd.src()) continue;
      for (Eigen::Index j = 0; j < fwd.dst(); ++j) {
        if (pair.latent.contains(static_cast<std::size_t>(j))) {
          add(i, j, 1.0);
          ++positives;
        } else {
          negatives.emplace_back(i, j);
        }
      }
    }
    const std::size_t want =
        std::min(negatives.size(), positives * static_cast<std::size_t>(neg_ratio));
    // Partial Fisher-Yates: the first `want` slots become the sample.
    for (std::size_t k = 0; k < want; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, negatives.size() - 1);
      std::swap(negatives[k], negatives[pick(rng)]);
      add(negatives[k].first, negatives[k].second, 0.0);
    }
  }
  return out;
}

// A loss term with gradients w.r.t. the key and reference embeddings.
struct LossPart {
  double value = 0.0;
  EmbeddingMatrix grad_key;
  EmbeddingMatrix grad_ref;
};

struct LossReport {
  double cycle_loss = 0.0;
  double forward_loss = 0.0;
  double total = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 2.0;
  EmbeddingMatrix grad_embeddings_key;
  EmbeddingMatrix grad_embeddings_ref;

  bool finite() const {
    return std::isfinite(total) && grad_embeddings_key.allFinite() &&
           grad_embeddings_ref.allFinite();
  }
};

// Detector loss is not part of this artifact, so total = g1*cycle + g2*forward.
inline LossReport total_loss(const LossPart& cycle_part, const LossPart& forward_part,
                             double gamma1, double gamma2) {
  if (cycle_part.grad_key.rows() != forward_part.grad_key.rows() ||
      cycle_part.grad_key.cols() != forward_part.grad_key.cols() ||
      cycle_part.grad_ref.rows() != forward_part.grad_ref.rows() ||
      cycle_part.grad_ref.cols() != forward_part.grad_ref.cols()) {
    throw InvalidArgument("total_loss: gradient shapes differ");
  }
  LossReport r;
  r.cycle_loss = cycle_part.value;
  r.forward_loss = forward_part.value;
  r.gamma1 = gamma1;
  r.gamma2 = gamma2;
  r.total = gamma1 * cycle_part.value + gamma2 * forward_part.value;
  r.grad_embeddings_key = gamma1 * cycle_part.grad_key + gamma2 * forward_part.grad_key;
  r.grad_embeddings_ref = gamma1 * cycle_part.grad_ref + gamma2 * forward_part.grad_ref;
  return r;
}

struct WalkConfig {
  GraphConfig graph{};
  double alpha1 = 0.7;
  double beta_cycle = 0.8;
  double gamma1 = 1.0;
  double gamma2 = 2.0;
  int neg_ratio = 3;
  TargetPolicy targets = TargetPolicy::kMultiPositive;
};

// Everything computed on one key/reference frame pair.
struct WalkResult {
  TransitionMatrix fwd;    // key positives -> reference nodes
  TransitionMatrix bwd;    // reference nodes -> key nodes
  TransitionMatrix cycle;  // fwd * bwd
  TargetSets targets;
  ForwardAssignment assignment;
  LossReport report;
};

// Full chain: embeddings -> cosines -> softmax -> chained cycle -> losses,
// then back down to the embeddings. Pseudo-assignments are treated as
// constants; pass `frozen` to reuse a previous assignment (finite-difference
// checks perturb embeddings without letting the argmax move).
inline WalkResult walk_loss(const NodeSet& key, const NodeSet& ref, const WalkConfig& cfg,
                            std::uint64_t rng_seed,
                            const ForwardAssignment* frozen = nullptr) {
  key.validate();
  ref.validate();
  cfg.graph.validate();
  if (key.positive_count == 0) throw InvalidArgument("walk_loss: key frame has no positive nodes");
  if (ref.empty()) throw InvalidArgument("walk_loss: reference frame has no nodes");
  if (key.embeddings.cols() != ref.embeddings.cols()) {
    throw InvalidArgument("walk_loss: embedding dimension mismatch");
  }
  const double tau = cfg.graph.tau;
  const double eps = cfg.graph.eps_norm;
  const auto np = static_cast<Eigen::Index>(key.positive_count);
  const EmbeddingMatrix key_pos = key.embeddings.topRows(np);

  WalkResult w;
  w.fwd = transition_from_cosines(cosine_matrix(key_pos, ref.embeddings, eps), tau);
  w.bwd = transition_from_cosines(cosine_matrix(ref.embeddings, key.embeddings, eps), tau);
  w.cycle = cycle_transition(w.fwd, w.bwd);
  w.targets = build_targets(key, cfg.alpha1, cfg.targets);

  std::vector<Cluster> key_clusters;
  key_clusters.reserve(key.positive_count);
  for (std::size_t i = 0; i < key.positive_count; ++i) {
    key_clusters.push_back(cluster_of(i, key.boxes, cfg.alpha1));
  }
  w.assignment = frozen ? *frozen
                        : forward_assign(w.fwd, w.bwd, key_clusters, ref.boxes, cfg.beta_cycle,
                                         cfg.alpha1);

  const ScalarGrad lc = cycle_loss(w.cycle, w.targets);
  const ScalarGrad lf = forward_loss(w.fwd, w.assignment, cfg.neg_ratio, rng_seed);

  // Pull a pair of transition-matrix gradients back to the embeddings.
  auto backprop = [&](const Eigen::MatrixXd& dfwd, const Eigen::MatrixXd& dbwd) {
    LossPart part;
    EmbeddingMatrix dk_pos, dref_f, dref_b, dkey;
    cosine_matrix_backward(key_pos, ref.embeddings, softmax_rows_backward(w.fwd.probs, dfwd, tau),
                           eps, dk_pos, dref_f);
    cosine_matrix_backward(ref.embeddings, key.embeddings,
                           softmax_rows_backward(w.bwd.probs, dbwd, tau), eps, dref_b, dkey);
    dkey.topRows(np) += dk_pos;
    part.grad_key = std::move(dkey);
    part.grad_ref = dref_f + dref_b;
    return part;
  };

  LossPart cyc = backprop(lc.grad * w.bwd.probs.transpose(), w.fwd.probs.transpose() * lc.grad);
  cyc.value = lc.value;
  LossPart fw = backprop(lf.grad, Eigen::MatrixXd::Zero(w.bwd.src(), w.bwd.dst()));
  fw.value = lf.value;
  w.report = total_loss(cyc, fw, cfg.gamma1, cfg.gamma2);
  return w;
}

// Max relative error between the analytic gradient returned by `evaluate`
// and central differences, over every coordinate of `x`.
// `evaluate(x)` returns std::pair<double, Eigen::MatrixXd> (value, gradient).
template <typename Evaluate>
double grad_check(Evaluate&& evaluate, const Eigen::MatrixXd& x, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw InvalidArgument("grad_check: step out of [1e-7, 1e-3]");
  const auto [value, grad] = evaluate(x);
  if (!std::isfinite(value)) throw InvalidArgument("grad_check: non-finite loss");
  double worst = 0.0;
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + step;
      const double up = evaluate(probe).first;
      probe(i, j) = orig - step;
      const double down = evaluate(probe).first;
      probe(i, j) = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw InvalidArgument("grad_check: non-finite loss");
      }
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grad(i, j);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace walker
