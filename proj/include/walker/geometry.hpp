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

// Axis-aligned boxes, IoU, confidence partitioning and IoU clusters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "walker/error.hpp"

namespace walker {

// (x, y) is the top-left corner, in pixels.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double area() const { return w * h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w > 0.0 && h > 0.0;
  }

  static Box from_center(double cx, double cy, double w, double h) {
    return Box{cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline void require_valid(const Box& b) {
  if (!b.valid()) {
    throw InvalidArgument("invalid box (" + std::to_string(b.x) + "," +
                          std::to_string(b.y) + "," + std::to_string(b.w) +
                          "," + std::to_string(b.h) + ")");
  }
}

struct Detection {
  Box box;
  double confidence = 1.0;
  int frame = 0;
  int class_id = 1;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Nodes whose IoU with the anchor node is at least alpha1.
struct Cluster {
  std::size_t anchor = 0;
  std::vector<std::size_t> members;  // sorted, contains anchor

  std::size_t size() const { return members.size(); }
  bool contains(std::size_t idx) const {
    return std::binary_search(members.begin(), members.end(), idx);
  }

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

inline double iou(const Box& a, const Box& b) {
  const double ix0 = std::max(a.x, b.x);
  const double iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x + a.w, b.x + b.w);
  const double iy1 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Written symmetrically so iou(a, b) == iou(b, a) bit for bit.
  const double uni = (a.area() + b.area()) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

struct ConfidencePartition {
  std::vector<Detection> high;  // conf >= beta_high
  std::vector<Detection> low;   // beta_low <= conf < beta_high
  std::vector<Detection> rest;  // conf < beta_low
};

inline ConfidencePartition partition_by_confidence(std::span<const Detection> dets,
                                                   double beta_high,
                                                   double beta_low) {
  if (beta_low > beta_high) {
    throw InvalidArgument("partition_by_confidence: beta_low > beta_high");
  }
  ConfidencePartition out;
  for (const auto& d : dets) {
    if (d.confidence >= beta_high) {
      out.high.push_back(d);
    } else if (d.confidence >= beta_low) {
      out.low.push_back(d);
    } else {
      out.rest.push_back(d);
    }
  }
  return out;
}

// Anchor-centric: membership is IoU against the anchor only, no closure.
inline Cluster cluster_of(std::size_t anchor, std::span<const Box> boxes,
                          double alpha1) {
  if (anchor >= boxes.size()) {
    throw InvalidArgument("cluster_of: anchor " + std::to_string(anchor) +
                          " out of range (" + std::to_string(boxes.size()) +
                          " boxes)");
  }
  if (!(alpha1 > 0.0 && alpha1 <= 1.0)) {
    throw InvalidArgument("cluster_of: alpha1 must lie in (0, 1]");
  }
  Cluster c;
  c.anchor = anchor;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (j == anchor || iou(boxes[j], boxes[anchor]) >= alpha1) {
      c.members.push_back(j);
    }
  }
  return c;
}

}  // namespace walker
