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

// Minimum-cost linear assignment (Hungarian method with row potentials,
// O(n^2 m) shortest augmenting paths) on rectangular matrices.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "walker/error.hpp"

namespace walker {

struct AssignmentResult {
  std::vector<std::pair<int, int>> matches;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

namespace detail {

// rows <= cols. Returns col assigned to each row.
inline std::vector<int> solve_wide(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

// Optimal assignment of min(rows, cols) pairs.
inline AssignmentResult hungarian(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw InvalidArgument("hungarian: cost matrix has non-finite entries");
  AssignmentResult r;
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<int> row_to_col(n, -1);
  if (n > 0 && m > 0) {
    if (n <= m) {
      row_to_col = detail::solve_wide(cost);
    } else {
      const std::vector<int> col_to_row = detail::solve_wide(cost.transpose());
      for (int j = 0; j < m; ++j) row_to_col[col_to_row[j]] = j;
    }
  }
  std::vector<char> col_used(m, 0);
  for (int i = 0; i < n; ++i) {
    if (row_to_col[i] < 0) {
      r.unmatched_rows.push_back(i);
      continue;
    }
    r.matches.emplace_back(i, row_to_col[i]);
    r.total_cost += cost(i, row_to_col[i]);
    col_used[row_to_col[i]] = 1;
  }
  for (int j = 0; j < m; ++j) {
    if (!col_used[j]) r.unmatched_cols.push_back(j);
  }
  return r;
}

// Assignment where pairs costing more than `threshold` may not be matched.
// Such entries are replaced by a cost no matching can prefer, and any pair
// that still lands on one is reported as unmatched.
inline AssignmentResult gated_assignment(const Eigen::MatrixXd& cost, double threshold) {
  const double big = 1e6 + 2.0 * (cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0) * (cost.rows() + cost.cols() + 1);
  Eigen::MatrixXd gated = cost;
  for (Eigen::Index i = 0; i < gated.rows(); ++i)
    for (Eigen::Index j = 0; j < gated.cols(); ++j)
      if (gated(i, j) > threshold) gated(i, j) = big;
  const AssignmentResult raw = hungarian(gated);
  AssignmentResult r;
  std::vector<char> row_used(cost.rows(), 0), col_used(cost.cols(), 0);
  for (const auto& [i, j] : raw.matches) {
    if (cost(i, j) > threshold) continue;
    r.matches.emplace_back(i, j);
    r.total_cost += cost(i, j);
    row_used[i] = col_used[j] = 1;
  }
  for (int i = 0; i < cost.rows(); ++i) if (!row_used[i]) r.unmatched_rows.push_back(i);
  for (int j = 0; j < cost.cols(); ++j) if (!col_used[j]) r.unmatched_cols.push_back(j);
  return r;
}

}  // namespace walker
