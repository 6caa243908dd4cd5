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

// Command line front end: synth | train | track | eval | inspect-graph | ablate.

#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "walker/config.hpp"
#include "walker/error.hpp"
#include "walker/experiment.hpp"
#include "walker/io.hpp"
#include "walker/losses.hpp"
#include "walker/metrics.hpp"
#include "walker/trainer.hpp"

namespace walker {

namespace cli_detail {

struct Common {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string config_out;
  int parallel = 1;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key=value configuration file");
  sub->add_option("--preset", c.preset, "start from a preset (mot17, dancetrack, bdd100k)");
  sub->add_option("--set", c.overrides, "override one key, as key=value (repeatable)");
  sub->add_option("--config-out", c.config_out, "write the resolved configuration here");
  sub->add_option("--parallel", c.parallel, "worker threads across sequences")->check(CLI::PositiveNumber);
}

inline RunConfig resolve(const Common& c, std::ostream& out) {
  if (!c.config_path.empty() && !c.preset.empty()) {
    throw InvalidArgument("give either --config or --preset, not both");
  }
  RunConfig cfg = c.config_path.empty() ? preset_config(c.preset.empty() ? "dancetrack" : c.preset)
                                        : load_config(c.config_path);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + o + "'");
    set_config_value(cfg, text::trim(std::string_view(o).substr(0, eq)),
                     std::string_view(o).substr(eq + 1));
  }
  cfg.validate();
  const std::string echo = echo_config(cfg);
  out << echo;
  if (!c.config_out.empty()) write_text_file(c.config_out, echo);
  return cfg;
}

inline bool is_sequence_dir(const std::filesystem::path& p) {
  return std::filesystem::exists(p / "meta.txt");
}

inline std::vector<SequenceData> load_dataset(const std::filesystem::path& dir, bool require_gt, int workers) {
  std::vector<std::filesystem::path> paths =
      is_sequence_dir(dir) ? std::vector<std::filesystem::path>{dir} : list_sequences(dir);
  std::vector<SequenceData> out(paths.size());
  parallel_for(paths.size(), workers, [&](std::size_t i) { out[i] = read_sequence_dir(paths[i], require_gt); });
  return out;
}

inline EmbedderModel model_or_initial(const std::string& path, const RunConfig& cfg, std::ostream& out) {
  if (!path.empty()) return load_model(path);
  out << "# no --model given: using the untrained embedder\n";
  return initial_model(cfg.train);
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Self-supervised multi-object tracking on synthetic sequences"};
  app.require_subcommand(1);

  Common common;

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset directory");
  add_common(synth, common);
  std::string synth_out;
  synth->add_option("--out", synth_out, "dataset directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train the embedder without identity labels");
  add_common(train_cmd, common);
  std::string train_data, model_out, history_out;
  train_cmd->add_option("--dataset", train_data, "dataset directory")->required();
  train_cmd->add_option("--out", model_out, "model file")->required();
  train_cmd->add_option("--history", history_out, "loss history CSV (default: <out>.loss.csv)");

  auto* track_cmd = app.add_subcommand("track", "track one sequence or every sequence of a dataset");
  add_common(track_cmd, common);
  std::string track_in, track_model, track_out;
  track_cmd->add_option("--in", track_in, "sequence or dataset directory")->required();
  track_cmd->add_option("--model", track_model, "model file");
  track_cmd->add_option("--out", track_out, "results file (sequence) or directory (dataset)")->required();

  auto* eval_cmd = app.add_subcommand("eval", "score results against ground truth");
  add_common(eval_cmd, common);
  std::string eval_gt, eval_pred, eval_out;
  eval_cmd->add_option("--gt", eval_gt, "ground truth file")->required();
  eval_cmd->add_option("--pred", eval_pred, "results file")->required();
  eval_cmd->add_option("--out", eval_out, "report file (key=value)");

  auto* inspect = app.add_subcommand("inspect-graph", "dump the transition matrices of one frame pair");
  add_common(inspect, common);
  std::string inspect_in, inspect_model, inspect_out;
  int key_frame = 1, ref_frame = 2;
  inspect->add_option("--in", inspect_in, "sequence directory")->required();
  inspect->add_option("--model", inspect_model, "model file");
  inspect->add_option("--key", key_frame, "key frame (1-based)")->required();
  inspect->add_option("--ref", ref_frame, "reference frame (1-based)")->required();
  inspect->add_option("--out", inspect_out, "CSV file")->required();

  auto* ablate = app.add_subcommand("ablate", "run the metric and loss ablation matrix");
  add_common(ablate, common);
  std::string ablate_data, ablate_out;
  int seeds = 5, holdout = 0;
  ablate->add_option("--dataset", ablate_data, "dataset directory")->required();
  ablate->add_option("--seeds", seeds, "training seeds per variant")->check(CLI::PositiveNumber);
  ablate->add_option("--holdout", holdout, "sequences held out for scoring (default: a quarter)");
  ablate->add_option("--out", ablate_out, "table file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const RunConfig cfg = resolve(common, out);
    const int workers = common.parallel;

    if (synth->parsed()) {
      const auto data = synthesize_dataset(cfg, cfg.sequences, cfg.seed, workers);
      for (const auto& d : data) write_sequence_dir(std::filesystem::path(synth_out) / d.name, d);
      out << "wrote " << data.size() << " sequences to " << synth_out << "\n";
    } else if (train_cmd->parsed()) {
      const auto data = load_dataset(train_data, true, workers);
      const TrainResult r = train_on(data, cfg.train);
      save_model(model_out, r.model);
      std::string csv = "epoch,loss\n";
      for (std::size_t e = 0; e < r.history.size(); ++e) {
        csv += std::to_string(e + 1) + "," + text::format_double(r.history[e]) + "\n";
      }
      write_text_file(history_out.empty() ? model_out + ".loss.csv" : history_out, csv);
      out << "trained on " << data.size() << " sequences for " << cfg.train.epochs << " epochs\n";
    } else if (track_cmd->parsed()) {
      const EmbedderModel model = model_or_initial(track_model, cfg, out);
      const bool single = is_sequence_dir(track_in);
      const auto data = load_dataset(track_in, false, workers);
      std::vector<std::vector<TrackOutput>> results(data.size());
      parallel_for(data.size(), workers,
                   [&](std::size_t i) { results[i] = track_data(data[i], model, cfg.track); });
      if (single) {
        write_mot(track_out, results_to_mot(results[0]));
      } else {
        std::filesystem::create_directories(track_out);
        for (std::size_t i = 0; i < data.size(); ++i) {
          write_mot(std::filesystem::path(track_out) / (data[i].name + ".txt"), results_to_mot(results[i]));
        }
      }
      out << "tracked " << data.size() << " sequence(s)\n";
    } else if (eval_cmd->parsed()) {
      const auto gt = to_labeled(read_mot(eval_gt));
      const auto pred = to_labeled(read_mot(eval_pred));
      const EvalReport r = evaluate(gt, pred);
      out << format_report_text(r) << format_report_kv(r);
      if (!eval_out.empty()) write_text_file(eval_out, format_report_kv(r));
    } else if (inspect->parsed()) {
      const SequenceData d = read_sequence_dir(inspect_in, false);
      if (key_frame < 1 || key_frame > d.length || ref_frame < 1 || ref_frame > d.length) {
        throw InvalidArgument("inspect-graph: frame out of range");
      }
      const EmbedderModel model = model_or_initial(inspect_model, cfg, out);
      const TrainingSequence ts = training_view(d, effective_stride(cfg.train));
      std::mt19937_64 rng(derive_seed(cfg.train.seed, static_cast<std::uint64_t>(key_frame) << 20 | ref_frame));
      const auto& kf = ts.frames[static_cast<std::size_t>(key_frame - 1)];
      const auto& rf = ts.frames[static_cast<std::size_t>(ref_frame - 1)];
      TrainConfig plain = cfg.train;
      plain.proposals_per_detection = 0;
      const NodeSelection ks = select_nodes(kf.detections, kf.features, reference_boxes(kf, plain), plain, rng);
      const NodeSelection rs = select_nodes(rf.detections, rf.features, reference_boxes(rf, plain), plain, rng);
      if (!ks.has_positives() || rs.size() == 0) throw InvalidArgument("inspect-graph: no walk nodes in this pair");
      const WalkResult w = walk_loss(to_node_set(ks, model), to_node_set(rs, model), plain.walk(), 0);
      std::string csv = "section,row,col,value\n";
      auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = 0; j < m.cols(); ++j)
            csv += std::string(name) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
                   text::format_double(m(i, j)) + "\n";
      };
      dump("forward", w.fwd.probs);
      dump("backward", w.bwd.probs);
      dump("cycle", w.cycle.probs);
      for (const auto& p : w.assignment.pairs) {
        csv += "assignment," + std::to_string(p.key.anchor) + "," + std::to_string(p.latent.anchor) + "," +
               text::format_double(p.closure) + "\n";
      }
      csv += "loss,cycle,0," + text::format_double(w.report.cycle_loss) + "\n";
      csv += "loss,forward,0," + text::format_double(w.report.forward_loss) + "\n";
      csv += "loss,total,0," + text::format_double(w.report.total) + "\n";
      write_text_file(inspect_out, csv);
      out << "key nodes " << ks.size() << " (" << ks.positive_count << " positive), reference nodes "
          << rs.size() << "\n";
    } else if (ablate->parsed()) {
      const auto data = load_dataset(ablate_data, true, workers);
      if (data.size() < 2) throw InvalidArgument("ablate: need at least two sequences");
      const std::size_t held = holdout > 0 ? static_cast<std::size_t>(holdout)
                                           : std::max<std::size_t>(1, data.size() / 4);
      if (held >= data.size()) throw InvalidArgument("ablate: holdout leaves no training sequences");
      const std::span<const SequenceData> all(data);
      const auto rows = run_ablation(cfg, all.first(data.size() - held), all.last(held), seeds,
                                     default_ablation_variants(), workers);
      const std::string table = format_ablation(rows);
      out << table;
      if (!ablate_out.empty()) write_text_file(ablate_out, table);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace walker
