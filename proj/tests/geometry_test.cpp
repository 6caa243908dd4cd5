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

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "walker/geometry.hpp"

namespace walker {
namespace {

std::vector<Box> random_boxes(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0.0, 100.0), size(1.0, 40.0);
  std::vector<Box> out;
  for (int i = 0; i < n; ++i) out.push_back(Box{pos(rng), pos(rng), size(rng), size(rng)});
  return out;
}

// Pixel-free oracle: overlap along each axis, then areas.
double iou_oracle(const Box& a, const Box& b) {
  const double ox = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double oy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ox * oy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

TEST(Iou, Examples) {
  EXPECT_EQ(iou(Box{3, 4, 5, 6}, Box{3, 4, 5, 6}), 1.0);
  EXPECT_EQ(iou(Box{0, 0, 1, 1}, Box{5, 5, 1, 1}), 0.0);
  EXPECT_NEAR(iou(Box{0, 0, 2, 2}, Box{1, 1, 2, 2}), 1.0 / 7.0, 1e-15);
  // Touching edges share no area.
  EXPECT_EQ(iou(Box{0, 0, 1, 1}, Box{1, 0, 1, 1}), 0.0);
}

TEST(Iou, SymmetricBoundedAndMatchesOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto b = random_boxes(rng, 2);
    const double v = iou(b[0], b[1]);
    EXPECT_EQ(v, iou(b[1], b[0]));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, iou_oracle(b[0], b[1]), 1e-12);
    EXPECT_NEAR(iou(b[0], b[0]), 1.0, 1e-12);
  }
}

TEST(Box, ValidityAndCenters) {
  EXPECT_TRUE((Box{0, 0, 1, 1}).valid());
  EXPECT_FALSE((Box{0, 0, 0, 1}).valid());
  EXPECT_FALSE((Box{0, 0, 1, -2}).valid());
  EXPECT_FALSE((Box{std::nan(""), 0, 1, 1}).valid());
  EXPECT_THROW(require_valid(Box{0, 0, -1, 1}), InvalidArgument);
  const Box b = Box::from_center(10, 20, 4, 6);
  EXPECT_EQ(b, (Box{8, 17, 4, 6}));
  EXPECT_EQ(b.cx(), 10.0);
  EXPECT_EQ(b.cy(), 20.0);
}

TEST(PartitionByConfidence, Examples) {
  std::vector<Detection> dets{{Box{}, 0.9, 0, 1}, {Box{}, 0.4, 0, 1}, {Box{}, 0.05, 0, 1}};
  const auto p = partition_by_confidence(dets, 0.6, 0.1);
  ASSERT_EQ(p.high.size(), 1u);
  ASSERT_EQ(p.low.size(), 1u);
  ASSERT_EQ(p.rest.size(), 1u);
  EXPECT_EQ(p.high[0].confidence, 0.9);
  EXPECT_EQ(p.low[0].confidence, 0.4);
  EXPECT_EQ(p.rest[0].confidence, 0.05);

  const auto empty = partition_by_confidence({}, 0.6, 0.1);
  EXPECT_TRUE(empty.high.empty() && empty.low.empty() && empty.rest.empty());

  std::vector<Detection> boundary(4, Detection{Box{}, 0.6, 0, 1});
  EXPECT_EQ(partition_by_confidence(boundary, 0.6, 0.1).high.size(), 4u);
  EXPECT_THROW(partition_by_confidence(dets, 0.1, 0.6), InvalidArgument);
}

TEST(PartitionByConfidence, EveryDetectionLandsOnce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::vector<Detection> dets;
  for (int i = 0; i < 500; ++i) dets.push_back(Detection{Box{}, conf(rng), 0, 1});
  const auto p = partition_by_confidence(dets, 0.6, 0.1);
  EXPECT_EQ(p.high.size() + p.low.size() + p.rest.size(), dets.size());
  for (const auto& d : p.high) EXPECT_GE(d.confidence, 0.6);
  for (const auto& d : p.low) EXPECT_TRUE(d.confidence >= 0.1 && d.confidence < 0.6);
  for (const auto& d : p.rest) EXPECT_LT(d.confidence, 0.1);
}

TEST(ClusterOf, Examples) {
  const std::vector<Box> one{Box{0, 0, 5, 5}};
  EXPECT_EQ(cluster_of(0, one, 0.7).members, std::vector<std::size_t>{0});

  const std::vector<Box> twins{Box{1, 1, 4, 4}, Box{1, 1, 4, 4}};
  EXPECT_EQ(cluster_of(0, twins, 0.7).members, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(cluster_of(1, twins, 0.7).members, (std::vector<std::size_t>{0, 1}));

  // IoU of the first two is 81/119, just under 0.7.
  const std::vector<Box> three{Box{0, 0, 10, 10}, Box{1, 1, 10, 10}, Box{50, 50, 10, 10}};
  EXPECT_NEAR(iou(three[0], three[1]), 81.0 / 119.0, 1e-15);
  EXPECT_EQ(cluster_of(0, three, 0.7).members, std::vector<std::size_t>{0});
  EXPECT_EQ(cluster_of(0, three, 0.68).members, (std::vector<std::size_t>{0, 1}));

  EXPECT_THROW(cluster_of(3, three, 0.7), InvalidArgument);
  EXPECT_THROW(cluster_of(0, three, 0.0), InvalidArgument);
}

TEST(ClusterOf, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 50);
  for (int trial = 0; trial < 100; ++trial) {
    // Clumped boxes so clusters are non-trivial.
    std::vector<Box> boxes;
    const auto seeds = random_boxes(rng, 5);
    std::normal_distribution<double> jitter(0.0, 1.5);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const Box& s = seeds[static_cast<std::size_t>(i) % seeds.size()];
      boxes.push_back(Box{s.x + jitter(rng), s.y + jitter(rng), s.w, s.h});
    }
    for (std::size_t a = 0; a < boxes.size(); ++a) {
      const Cluster c = cluster_of(a, boxes, 0.7);
      EXPECT_EQ(c.anchor, a);
      EXPECT_TRUE(c.contains(a));
      std::vector<std::size_t> expected;
      for (std::size_t j = 0; j < boxes.size(); ++j)
        if (j == a || iou_oracle(boxes[a], boxes[j]) >= 0.7) expected.push_back(j);
      EXPECT_EQ(c.members, expected);
    }
  }
}

}  // namespace
}  // namespace walker
