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

// Temporal object appearance graph math.
//
// Nodes are object RoIs described by embedding rows. Edges between the nodes
// of two frames are the row-softmax of their cosine similarities scaled by
// 1/tau, giving a row-stochastic transition matrix. Chaining a forward and a
// backward transition gives the cycle (return) distribution of a walker.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"

namespace walker {

// One row per node.
using EmbeddingMatrix = Eigen::MatrixXd;

struct GraphConfig {
  double tau = 0.05;
  double eps_norm = 1e-12;

  void validate() const {
    if (!(tau > 0.0)) throw InvalidArgument("GraphConfig: tau must be > 0");
    if (!(eps_norm > 0.0)) throw InvalidArgument("GraphConfig: eps_norm must be > 0");
  }
};

// The first positive_count nodes are positives, the remainder negatives.
struct NodeSet {
  std::vector<Box> boxes;
  EmbeddingMatrix embeddings;
  std::size_t positive_count = 0;

  std::size_t size() const { return boxes.size(); }
  bool empty() const { return boxes.empty(); }

  void validate() const {
    if (static_cast<Eigen::Index>(boxes.size()) != embeddings.rows()) {
      throw InvalidArgument("NodeSet: box count does not match embedding rows");
    }
    if (positive_count > boxes.size()) {
      throw InvalidArgument("NodeSet: positive_count exceeds node count");
    }
  }
};

// Row-stochastic matrix of transition probabilities from src to dst nodes.
struct TransitionMatrix {
  Eigen::MatrixXd probs;

  Eigen::Index src() const { return probs.rows(); }
  Eigen::Index dst() const { return probs.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return probs(i, j); }

  double max_row_sum_error() const {
    double err = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      err = std::max(err, std::abs(probs.row(i).sum() - 1.0));
    }
    return err;
  }
};

inline Eigen::VectorXd row_norms(const EmbeddingMatrix& m, double eps) {
  Eigen::VectorXd n(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) n(i) = std::max(m.row(i).norm(), eps);
  return n;
}

inline Eigen::MatrixXd cosine_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                     double eps_norm = 1e-12) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("cosine_matrix: dimension mismatch (" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
  }
  const Eigen::VectorXd na = row_norms(a, eps_norm);
  const Eigen::VectorXd nb = row_norms(b, eps_norm);
  Eigen::MatrixXd c = a * b.transpose();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      c(i, j) = std::clamp(c(i, j) / (na(i) * nb(j)), -1.0, 1.0);
    }
  }
  return c;
}

// Per-row softmax with max subtraction; at tau = 0.05 a cosine of 1 is a
// logit of 20 and larger logits appear at smaller temperatures.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      sum += out(i, j);
    }
    out.row(i) /= sum;
  }
  return out;
}

inline TransitionMatrix transition_from_cosines(const Eigen::MatrixXd& cosines, double tau) {
  if (cosines.cols() == 0) throw InvalidArgument("transition_matrix: empty destination set");
  if (!(tau > 0.0)) throw InvalidArgument("transition_matrix: tau must be > 0");
  return TransitionMatrix{softmax_rows(cosines / tau)};
}

inline TransitionMatrix transition_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                          const GraphConfig& cfg) {
  cfg.validate();
  if (b.rows() == 0) throw InvalidArgument("transition_matrix: empty destination set");
  return transition_from_cosines(cosine_matrix(a, b, cfg.eps_norm), cfg.tau);
}

inline TransitionMatrix cycle_transition(const TransitionMatrix& fwd, const TransitionMatrix& bwd) {
  if (fwd.dst() != bwd.src()) {
    throw InvalidArgument("cycle_transition: shape mismatch (" + std::to_string(fwd.dst()) +
                          " vs " + std::to_string(bwd.src()) + ")");
  }
  return TransitionMatrix{fwd.probs * bwd.probs};
}

// Distribution over latent (reference-frame) nodes j of a walk that starts at
// source node i and returns to node l: fwd(i,j) * bwd(j,l) / C.
inline Eigen::VectorXd latent_transition_distribution(const TransitionMatrix& fwd,
                                                      const TransitionMatrix& bwd,
                                                      Eigen::Index i, Eigen::Index l) {
  if (fwd.dst() != bwd.src()) throw InvalidArgument("latent_transition_distribution: shape mismatch");
  if (i < 0 || i >= fwd.src() || l < 0 || l >= bwd.dst()) {
    throw InvalidArgument("latent_transition_distribution: index out of range");
  }
  Eigen::VectorXd p = fwd.probs.row(i).transpose().cwiseProduct(bwd.probs.col(l));
  const double c = p.sum();
  if (!(c > 0.0)) throw InvalidArgument("latent_transition_distribution: zero normalizer");
  return p / c;
}

// Latent distribution averaged over every walk that starts in the source
// cluster and ends in the target cluster; source members beyond fwd's rows
// (negative nodes) cannot start a walk and are skipped.
inline Eigen::VectorXd max_likelihood_distribution(const TransitionMatrix& fwd,
                                                   const TransitionMatrix& bwd,
                                                   const Cluster& source, const Cluster& targets) {
  if (source.members.empty() || targets.members.empty()) {
    throw InvalidArgument("max_likelihood_state: empty cluster");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(fwd.dst());
  std::size_t pairs = 0;
  for (std::size_t i : source.members) {
    if (static_cast<Eigen::Index>(i) >= fwd.src()) continue;
    for (std::size_t l : targets.members) {
      acc += latent_transition_distribution(fwd, bwd, static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(l));
      ++pairs;
    }
  }
  if (pairs == 0) throw InvalidArgument("max_likelihood_state: no source member is a walk origin");
  return acc / static_cast<double>(pairs);
}

// Lowest index wins ties.
inline std::size_t argmax_lowest(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v(j) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(j);
  }
  return best;
}

inline std::size_t max_likelihood_state(const TransitionMatrix& fwd, const TransitionMatrix& bwd,
                                        const Cluster& source, const Cluster& targets) {
  return argmax_lowest(max_likelihood_distribution(fwd, bwd, source, targets));
}

// (1/|targets|) * sum over m in cluster, l in targets of cycle(m, l).
inline double cycle_closure_probability(const TransitionMatrix& cycle, const Cluster& cluster,
                                        const Cluster& targets) {
  if (cluster.members.empty() || targets.members.empty()) {
    throw InvalidArgument("cycle_closure_probability: empty cluster");
  }
  double s = 0.0;
  for (std::size_t m : cluster.members) {
    if (static_cast<Eigen::Index>(m) >= cycle.src()) {
      throw InvalidArgument("cycle_closure_probability: member is not a walk origin");
    }
    for (std::size_t l : targets.members) {
      if (static_cast<Eigen::Index>(l) >= cycle.dst()) {
        throw InvalidArgument("cycle_closure_probability: target out of range");
      }
      s += cycle(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l));
    }
  }
  return s / static_cast<double>(targets.members.size());
}

// ---------------------------------------------------------------------------
// Reverse-mode pieces for the embedding -> cosine -> softmax -> product chain.

// Given P = softmax_rows(C / tau) and dL/dP, returns dL/dC.
inline Eigen::MatrixXd softmax_rows_backward(const Eigen::MatrixXd& probs,
                                             const Eigen::MatrixXd& dprobs, double tau) {
  Eigen::MatrixXd dc(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double inner = probs.row(i).dot(dprobs.row(i));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      dc(i, j) = probs(i, j) * (dprobs(i, j) - inner) / tau;
    }
  }
  return dc;
}

// Gradient of sum(dcos .* cosine_matrix(a, b)) w.r.t. a and b. Rows whose
// norm falls under eps are treated as scaled by the constant 1/eps. The
// [-1, 1] clamp only trims rounding, so it is ignored here.
inline void cosine_matrix_backward(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                   const Eigen::MatrixXd& dcos, double eps_norm,
                                   EmbeddingMatrix& da, EmbeddingMatrix& db) {
  const Eigen::VectorXd na = row_norms(a, eps_norm);
  const Eigen::VectorXd nb = row_norms(b, eps_norm);
  const EmbeddingMatrix ua = na.cwiseInverse().asDiagonal() * a;
  const EmbeddingMatrix ub = nb.cwiseInverse().asDiagonal() * b;
  const EmbeddingMatrix dua = dcos * ub;
  const EmbeddingMatrix dub = dcos.transpose() * ua;
  auto project = [eps_norm](const EmbeddingMatrix& x, const EmbeddingMatrix& u,
                            const EmbeddingMatrix& du, const Eigen::VectorXd& n) {
    EmbeddingMatrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x.row(i).norm() > eps_norm) {
        g.row(i) = (du.row(i) - du.row(i).dot(u.row(i)) * u.row(i)) / n(i);
      } else {
        g.row(i) = du.row(i) / eps_norm;
      }
    }
    return g;
  };
  da = project(a, ua, dua, na);
  db = project(b, ub, dub, nb);
}

}  // namespace walker
