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

// CLEAR-MOT and identity metrics.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "walker/error.hpp"
#include "walker/geometry.hpp"
#include "walker/hungarian.hpp"
#include "walker/text.hpp"

namespace walker {

struct LabeledBox {
  int frame = 0;
  int id = 0;
  Box box;
};

struct FrameMatches {
  int frame = 0;
  std::vector<std::pair<int, int>> pairs;  // (gt id, pred id)
};

struct EvalReport {
  double mota = 0.0;
  double idf1 = 0.0;
  long id_switches = 0;
  long fp = 0;
  long fn = 0;
  long gt_count = 0;
  long pred_count = 0;
  long matches = 0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
  std::vector<FrameMatches> matches_per_frame;
};

namespace detail {

using FrameIndex = std::map<int, std::vector<const LabeledBox*>>;

inline FrameIndex index_by_frame(std::span<const LabeledBox> boxes, const char* what) {
  FrameIndex idx;
  for (const auto& b : boxes) {
    if (b.id < 0) throw InvalidArgument(std::string("evaluate: negative id in ") + what);
    idx[b.frame].push_back(&b);
  }
  for (auto& [frame, list] : idx) {
    std::sort(list.begin(), list.end(),
              [](const LabeledBox* a, const LabeledBox* b) { return a->id < b->id; });
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k]->id == list[k - 1]->id) {
        throw InvalidArgument(std::string("evaluate: duplicate id ") + std::to_string(list[k]->id) +
                              " in " + what + " frame " + std::to_string(frame));
      }
    }
  }
  return idx;
}

}  // namespace detail

inline EvalReport evaluate(std::span<const LabeledBox> gt, std::span<const LabeledBox> pred,
                           double iou_threshold = 0.5) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("evaluate: iou_threshold must lie in (0, 1]");
  }
  const detail::FrameIndex g_idx = detail::index_by_frame(gt, "ground truth");
  const detail::FrameIndex p_idx = detail::index_by_frame(pred, "prediction");
  std::set<int> frames;
  for (const auto& [f, _] : g_idx) frames.insert(f);
  for (const auto& [f, _] : p_idx) frames.insert(f);

  EvalReport r;
  r.gt_count = static_cast<long>(gt.size());
  r.pred_count = static_cast<long>(pred.size());
  std::map<int, int> last_match;  // gt id -> pred id of its latest match
  std::map<std::pair<int, int>, long> overlap;  // (gt id, pred id) -> frames with IoU >= thr
  const std::vector<const LabeledBox*> none;

  for (int f : frames) {
    const auto git = g_idx.find(f);
    const auto pit = p_idx.find(f);
    const auto& gs = git == g_idx.end() ? none : git->second;
    const auto& ps = pit == p_idx.end() ? none : pit->second;
    Eigen::MatrixXd ious(static_cast<Eigen::Index>(gs.size()), static_cast<Eigen::Index>(ps.size()));
    for (std::size_t i = 0; i < gs.size(); ++i) {
      for (std::size_t j = 0; j < ps.size(); ++j) {
        const double v = iou(gs[i]->box, ps[j]->box);
        ious(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        if (v >= iou_threshold) ++overlap[{gs[i]->id, ps[j]->id}];
      }
    }

    std::vector<char> g_used(gs.size(), 0), p_used(ps.size(), 0);
    FrameMatches fm{f, {}};
    // Keep last correspondences that are still valid.
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto lm = last_match.find(gs[i]->id);
      if (lm == last_match.end()) continue;
      for (std::size_t j = 0; j < ps.size(); ++j) {
        if (!p_used[j] && ps[j]->id == lm->second &&
            ious(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= iou_threshold) {
          g_used[i] = p_used[j] = 1;
          fm.pairs.emplace_back(gs[i]->id, ps[j]->id);
        }
      }
    }
    std::vector<std::size_t> gi, pj;
    for (std::size_t i = 0; i < gs.size(); ++i) if (!g_used[i]) gi.push_back(i);
    for (std::size_t j = 0; j < ps.size(); ++j) if (!p_used[j]) pj.push_back(j);
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(gi.size()), static_cast<Eigen::Index>(pj.size()));
    for (std::size_t a = 0; a < gi.size(); ++a)
      for (std::size_t b = 0; b < pj.size(); ++b)
        cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            1.0 - ious(static_cast<Eigen::Index>(gi[a]), static_cast<Eigen::Index>(pj[b]));
    const AssignmentResult ar = gated_assignment(cost, 1.0 - iou_threshold);
    for (const auto& [a, b] : ar.matches) {
      if (ious(static_cast<Eigen::Index>(gi[a]), static_cast<Eigen::Index>(pj[b])) < iou_threshold) continue;
      const int gid = gs[gi[a]]->id;
      const int pid = ps[pj[b]]->id;
      const auto lm = last_match.find(gid);
      if (lm != last_match.end() && lm->second != pid) ++r.id_switches;
      fm.pairs.emplace_back(gid, pid);
    }
    for (const auto& [gid, pid] : fm.pairs) last_match[gid] = pid;
    std::sort(fm.pairs.begin(), fm.pairs.end());
    const long m = static_cast<long>(fm.pairs.size());
    r.matches += m;
    r.fn += static_cast<long>(gs.size()) - m;
    r.fp += static_cast<long>(ps.size()) - m;
    r.matches_per_frame.push_back(std::move(fm));
  }

  if (r.gt_count > 0) {
    r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.id_switches) / static_cast<double>(r.gt_count);
  } else {
    r.mota = r.fp == 0 ? 1.0 : 0.0;
  }

  // Global identity matching maximizing the number of co-located frames.
  std::map<int, int> g_ids, p_ids;
  for (const auto& b : gt) g_ids.emplace(b.id, 0);
  for (const auto& b : pred) p_ids.emplace(b.id, 0);
  int k = 0;
  for (auto& [id, slot] : g_ids) slot = k++;
  k = 0;
  for (auto& [id, slot] : p_ids) slot = k++;
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g_ids.size()),
                                              static_cast<Eigen::Index>(p_ids.size()));
  for (const auto& [key, count] : overlap) {
    neg(g_ids[key.first], p_ids[key.second]) = -static_cast<double>(count);
  }
  const AssignmentResult idm = hungarian(neg);
  for (const auto& [i, j] : idm.matches) r.idtp += static_cast<long>(-neg(i, j));
  r.idfn = r.gt_count - r.idtp;
  r.idfp = r.pred_count - r.idtp;
  const long denom = r.gt_count + r.pred_count;
  r.idf1 = denom > 0 ? 2.0 * static_cast<double>(r.idtp) / static_cast<double>(denom) : 1.0;
  return r;
}

inline std::string format_report_text(const EvalReport& r) {
  std::ostringstream os;
  os << "MOTA  " << text::format_double(r.mota) << "\n"
     << "IDF1  " << text::format_double(r.idf1) << "\n"
     << "IDSW  " << r.id_switches << "\n"
     << "FP    " << r.fp << "\n"
     << "FN    " << r.fn << "\n"
     << "GT    " << r.gt_count << "\n";
  return os.str();
}

inline std::string format_report_kv(const EvalReport& r) {
  std::ostringstream os;
  os << "mota=" << text::format_double(r.mota) << "\n"
     << "idf1=" << text::format_double(r.idf1) << "\n"
     << "id_switches=" << r.id_switches << "\n"
     << "fp=" << r.fp << "\n"
     << "fn=" << r.fn << "\n"
     << "gt_count=" << r.gt_count << "\n"
     << "pred_count=" << r.pred_count << "\n"
     << "matches=" << r.matches << "\n"
     << "idtp=" << r.idtp << "\n"
     << "idfp=" << r.idfp << "\n"
     << "idfn=" << r.idfn << "\n";
  return os.str();
}

}  // namespace walker
