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

#include <functional>
#include <map>
#include <random>
#include <set>

#include "walker/metrics.hpp"
#include "walker/synth.hpp"

namespace walker {
namespace {

// Two parallel tracks over 10 frames.
std::vector<LabeledBox> two_tracks() {
  std::vector<LabeledBox> gt;
  for (int f = 0; f < 10; ++f) {
    gt.push_back({f, 1, Box{10.0 * f, 0, 20, 40}});
    gt.push_back({f, 2, Box{10.0 * f, 200, 20, 40}});
  }
  return gt;
}

// Best identity-level true positive count over every partial bijection of
// ids, by exhaustive search.
long brute_force_idtp(const std::vector<LabeledBox>& gt, const std::vector<LabeledBox>& pred, double thr) {
  std::map<std::pair<int, int>, long> overlap;
  std::set<int> g_ids, p_ids;
  for (const auto& g : gt) g_ids.insert(g.id);
  for (const auto& p : pred) p_ids.insert(p.id);
  for (const auto& g : gt)
    for (const auto& p : pred)
      if (g.frame == p.frame && iou(g.box, p.box) >= thr) ++overlap[{g.id, p.id}];
  const std::vector<int> gv(g_ids.begin(), g_ids.end()), pv(p_ids.begin(), p_ids.end());
  long best = 0;
  std::vector<char> used(pv.size(), 0);
  std::function<void(std::size_t, long)> rec = [&](std::size_t i, long acc) {
    if (i == gv.size()) {
      best = std::max(best, acc);
      return;
    }
    rec(i + 1, acc);
    for (std::size_t j = 0; j < pv.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const auto it = overlap.find({gv[i], pv[j]});
      rec(i + 1, acc + (it == overlap.end() ? 0 : it->second));
      used[j] = 0;
    }
  };
  rec(0, 0);
  return best;
}

TEST(Evaluate, PerfectPrediction) {
  const auto gt = two_tracks();
  const EvalReport r = evaluate(gt, gt);
  EXPECT_EQ(r.mota, 1.0);
  EXPECT_EQ(r.idf1, 1.0);
  EXPECT_EQ(r.id_switches, 0);
  EXPECT_EQ(r.matches, 20);
  EXPECT_EQ(r.matches_per_frame.size(), 10u);
}

TEST(Evaluate, EmptyPrediction) {
  const auto gt = two_tracks();
  const EvalReport r = evaluate(gt, std::vector<LabeledBox>{});
  EXPECT_EQ(r.mota, 0.0);
  EXPECT_EQ(r.fn, 20);
  EXPECT_EQ(r.idf1, 0.0);
}

TEST(Evaluate, MidpointSwap) {
  const auto gt = two_tracks();
  auto pred = gt;
  for (auto& p : pred) {
    if (p.frame >= 5) p.id = 3 - p.id;
  }
  const EvalReport r = evaluate(gt, pred);
  EXPECT_EQ(r.id_switches, 2);
  EXPECT_DOUBLE_EQ(r.mota, 0.9);
  const long idtp = brute_force_idtp(gt, pred, 0.5);
  EXPECT_EQ(idtp, 10);
  EXPECT_EQ(r.idtp, idtp);
  EXPECT_DOUBLE_EQ(r.idf1, 2.0 * idtp / 40.0);
}

TEST(Evaluate, KeepsPreviousCorrespondence) {
  // Pred 7 follows gt 1; from frame 2 on, pred 8 overlaps gt 1 better, but
  // the existing pairing still passes the threshold and is kept.
  std::vector<LabeledBox> gt, pred;
  for (int f = 0; f < 4; ++f) {
    gt.push_back({f, 1, Box{0, 0, 10, 10}});
    pred.push_back({f, 7, Box{f >= 2 ? 2.0 : 0.0, 0, 10, 10}});
    if (f >= 2) pred.push_back({f, 8, Box{0, 0, 10, 10}});
  }
  const EvalReport r = evaluate(gt, pred);
  EXPECT_EQ(r.id_switches, 0);
  for (const auto& fm : r.matches_per_frame) EXPECT_EQ(fm.pairs, (std::vector<std::pair<int, int>>{{1, 7}}));
  EXPECT_EQ(r.fp, 2);
}

TEST(Evaluate, FalsePositivesLowerMota) {
  const auto gt = two_tracks();
  auto pred = gt;
  double last = evaluate(gt, pred).mota;
  for (int k = 0; k < 5; ++k) {
    pred.push_back({k, 100 + k, Box{500, 500, 10, 10}});
    const double m = evaluate(gt, pred).mota;
    EXPECT_LE(m, last);
    last = m;
  }
}

TEST(Evaluate, SwapCountIsTwicePairSwaps) {
  // Four tracks; swap pairs (1,2) at frame 3 and (3,4) at frame 6.
  std::vector<LabeledBox> gt;
  for (int f = 0; f < 10; ++f)
    for (int id = 1; id <= 4; ++id) gt.push_back({f, id, Box{10.0 * f, 100.0 * id, 20, 40}});
  auto pred = gt;
  for (auto& p : pred) {
    if (p.frame >= 3 && (p.id == 1 || p.id == 2)) p.id = 3 - p.id;
    else if (p.frame >= 6 && (p.id == 3 || p.id == 4)) p.id = 7 - p.id;
  }
  EXPECT_EQ(evaluate(gt, pred).id_switches, 4);
}

TEST(Evaluate, RandomInstancesMatchIdOracleAndRelabeling) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> id(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gt = two_tracks();
    std::vector<LabeledBox> pred;
    for (int f = 0; f < 10; ++f) {
      std::set<int> taken;
      for (const auto& g : gt) {
        if (g.frame != f || u(rng) < 0.2) continue;
        int pid = id(rng);
        if (!taken.insert(pid).second) continue;
        pred.push_back({f, pid, Box{g.box.x + 4 * u(rng), g.box.y, g.box.w, g.box.h}});
      }
    }
    const EvalReport r = evaluate(gt, pred);
    EXPECT_EQ(r.idtp, brute_force_idtp(gt, pred, 0.5));
    EXPECT_GE(r.idf1, 0.0);
    EXPECT_LE(r.idf1, 1.0);
    EXPECT_DOUBLE_EQ(r.mota, 1.0 - static_cast<double>(r.fp + r.fn + r.id_switches) / 20.0);
    auto relabeled = pred;
    for (auto& p : relabeled) p.id = 50 - 3 * p.id;
    EXPECT_EQ(evaluate(gt, relabeled).idf1, r.idf1);
  }
}

TEST(Evaluate, SyntheticSelfEvaluation) {
  GenerationSpec spec;
  spec.auto_crossings = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticSequence s = generate_sequence(spec, seed);
    std::vector<LabeledBox> gt;
    for (int t = 0; t < s.length; ++t)
      for (const auto& o : s.objects)
        if (o.alive(t)) gt.push_back({t, o.identity, o.box_at(t)});
    const EvalReport r = evaluate(gt, gt);
    EXPECT_EQ(r.mota, 1.0);
    EXPECT_EQ(r.idf1, 1.0);
    EXPECT_EQ(r.id_switches, 0);
  }
}

TEST(Evaluate, Errors) {
  std::vector<LabeledBox> dup{{0, 1, Box{0, 0, 1, 1}}, {0, 1, Box{5, 5, 1, 1}}};
  EXPECT_THROW(evaluate(dup, std::vector<LabeledBox>{}), InvalidArgument);
  std::vector<LabeledBox> neg{{0, -1, Box{0, 0, 1, 1}}};
  EXPECT_THROW(evaluate(std::vector<LabeledBox>{}, neg), InvalidArgument);
  EXPECT_THROW(evaluate(dup, dup, 0.0), InvalidArgument);
  const EvalReport empty = evaluate(std::vector<LabeledBox>{}, std::vector<LabeledBox>{});
  EXPECT_EQ(empty.mota, 1.0);
  EXPECT_EQ(empty.idf1, 1.0);
}

TEST(Report, Formats) {
  const auto gt = two_tracks();
  const EvalReport r = evaluate(gt, gt);
  EXPECT_NE(format_report_text(r).find("MOTA  1\n"), std::string::npos);
  const std::string kv = format_report_kv(r);
  EXPECT_NE(kv.find("mota=1\n"), std::string::npos);
  EXPECT_NE(kv.find("id_switches=0\n"), std::string::npos);
}

}  // namespace
}  // namespace walker
