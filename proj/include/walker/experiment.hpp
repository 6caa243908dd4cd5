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

// End-to-end helpers: synthesize datasets, train, track and score. Shared by
// the command line tool and the experiment-level tests.

#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "walker/config.hpp"
#include "walker/io.hpp"
#include "walker/metrics.hpp"
#include "walker/synth.hpp"
#include "walker/tracker.hpp"
#include "walker/trainer.hpp"

namespace walker {

// Runs fn(0..n-1) on up to `workers` threads. Each index writes only its own
// result, so the outcome does not depend on the worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto run = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || failure) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string sequence_name(std::size_t index) {
  std::string digits = std::to_string(index);
  return "seq" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

inline SequenceData synthesize_sequence(const RunConfig& c, std::uint64_t seq_seed, std::string name) {
  const SyntheticSequence seq = generate_sequence(c.generation, derive_seed(seq_seed, 1));
  const SimulatedDetections dets = simulate_detections(seq, c.noise, derive_seed(seq_seed, 2));
  return make_sequence_data(std::move(name), seq, dets, seq_seed, c.annotation_stride);
}

// `count` sequences; sequence i is seeded from (seed, i) only.
inline std::vector<SequenceData> synthesize_dataset(const RunConfig& c, int count, std::uint64_t seed,
                                                    int workers = 1) {
  if (count < 1) throw InvalidArgument("synthesize_dataset: count must be >= 1");
  std::vector<SequenceData> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = synthesize_sequence(c, derive_seed(seed, 0x5e9000 + i), sequence_name(i));
  });
  return out;
}

inline int effective_stride(const TrainConfig& cfg) {
  return cfg.setting == AnnotationSetting::kDense ? 1 : cfg.annotation_stride;
}

inline TrainResult train_on(std::span<const SequenceData> data, const TrainConfig& cfg) {
  std::vector<TrainingSequence> views;
  views.reserve(data.size());
  for (const auto& d : data) views.push_back(training_view(d, effective_stride(cfg)));
  return train(views, cfg);
}

inline std::vector<TrackOutput> track_data(const SequenceData& d, const EmbedderModel& model,
                                           const TrackerConfig& cfg) {
  const std::vector<FrameInput> inputs = tracker_inputs(d, model);
  return track_sequence(inputs, cfg);
}

inline EvalReport evaluate_data(const SequenceData& d, const std::vector<TrackOutput>& tracks) {
  std::vector<LabeledBox> pred;
  pred.reserve(tracks.size());
  for (const auto& t : tracks) pred.push_back(LabeledBox{t.frame, t.track_id, t.box});
  return evaluate(d.ground_truth, pred);
}

struct Score {
  double idf1 = 0.0;
  double mota = 0.0;
  long id_switches = 0;
};

// Mean per-sequence IDF1 and MOTA; ID switches are summed.
inline Score score_model(std::span<const SequenceData> data, const EmbedderModel& model,
                         const TrackerConfig& cfg, int workers = 1) {
  std::vector<EvalReport> reports(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    reports[i] = evaluate_data(data[i], track_data(data[i], model, cfg));
  });
  Score s;
  for (const auto& r : reports) {
    s.idf1 += r.idf1;
    s.mota += r.mota;
    s.id_switches += r.id_switches;
  }
  if (!reports.empty()) {
    s.idf1 /= static_cast<double>(reports.size());
    s.mota /= static_cast<double>(reports.size());
  }
  return s;
}

// One row of the ablation matrix.
struct AblationVariant {
  std::string name;
  std::function<void(RunConfig&)> adjust;
  bool untrained = false;
};

inline std::vector<AblationVariant> default_ablation_variants() {
  return {
      {"walker/multi-positive/cycle+forward", [](RunConfig&) {}, false},
      {"walker/single-positive/cycle+forward",
       [](RunConfig& c) { c.train.targets = TargetPolicy::kSinglePositive; }, false},
      {"walker/multi-positive/cycle-only", [](RunConfig& c) { c.train.gamma2 = 0.0; }, false},
      {"walker/untrained", [](RunConfig&) {}, true},
      {"qd_walker/cosine",
       [](RunConfig& c) {
         c.track.mode = TrackerMode::kQdWalker;
         c.track.metric = SimilarityMetric::kCosine;
       },
       false},
      {"qd_walker/bisoftmax",
       [](RunConfig& c) {
         c.track.mode = TrackerMode::kQdWalker;
         c.track.metric = SimilarityMetric::kBisoftmax;
       },
       false},
      {"qd_walker/biwalk",
       [](RunConfig& c) {
         c.track.mode = TrackerMode::kQdWalker;
         c.track.metric = SimilarityMetric::kBiwalk;
       },
       false},
  };
}

struct AblationRow {
  std::string name;
  std::vector<Score> per_seed;
  Score mean;
};

// For every seed and variant: train on `train_set` with train_seed = seed
// (variants that only change tracking reuse the same model), then score on
// `eval_set`.
inline std::vector<AblationRow> run_ablation(const RunConfig& base, std::span<const SequenceData> train_set,
                                             std::span<const SequenceData> eval_set, int seeds,
                                             const std::vector<AblationVariant>& variants, int workers = 1) {
  if (seeds < 1) throw InvalidArgument("run_ablation: seeds must be >= 1");
  std::vector<AblationRow> rows(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows[v].name = variants[v].name;
    rows[v].per_seed.resize(static_cast<std::size_t>(seeds));
  }
  // Tracking-only variants share a model: train each distinct setup once.
  struct Job {
    RunConfig config;
    std::size_t model = 0;
  };
  std::vector<Job> jobs;
  std::vector<RunConfig> setups;
  std::vector<std::string> setup_keys;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (int s = 0; s < seeds; ++s) {
      RunConfig c = base;
      c.train.seed = base.train.seed + static_cast<std::uint64_t>(s);
      variants[v].adjust(c);
      c.validate();
      RunConfig train_only = base;
      train_only.train = c.train;
      const std::string key = echo_config(train_only) + (variants[v].untrained ? "untrained" : "");
      const auto it = std::find(setup_keys.begin(), setup_keys.end(), key);
      std::size_t model = static_cast<std::size_t>(it - setup_keys.begin());
      if (it == setup_keys.end()) {
        setup_keys.push_back(key);
        setups.push_back(c);
        if (variants[v].untrained) setups.back().train.epochs = 0;
      }
      jobs.push_back(Job{c, model});
    }
  }
  std::vector<EmbedderModel> models(setups.size());
  parallel_for(setups.size(), workers, [&](std::size_t m) {
    models[m] = setups[m].train.epochs == 0 ? initial_model(setups[m].train)
                                            : train_on(train_set, setups[m].train).model;
  });
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const std::size_t v = j / static_cast<std::size_t>(seeds);
    const std::size_t s = j % static_cast<std::size_t>(seeds);
    rows[v].per_seed[s] = score_model(eval_set, models[jobs[j].model], jobs[j].config.track);
  });
  for (auto& r : rows) {
    for (const auto& s : r.per_seed) {
      r.mean.idf1 += s.idf1;
      r.mean.mota += s.mota;
      r.mean.id_switches += s.id_switches;
    }
    r.mean.idf1 /= static_cast<double>(seeds);
    r.mean.mota /= static_cast<double>(seeds);
  }
  return rows;
}

inline std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string s = "variant" + std::string(width - 7, ' ') + "  mean_idf1  mean_mota  idsw\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %9.4f  %9.4f  %4ld\n", r.mean.idf1, r.mean.mota, r.mean.id_switches);
    s += r.name + std::string(width - r.name.size(), ' ') + buf;
  }
  return s;
}

}  // namespace walker
