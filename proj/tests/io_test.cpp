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

#include <filesystem>
#include <random>

#include "walker/io.hpp"

namespace walker {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("walker_io_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(ParseMot, Examples) {
  const MotRecord r = parse_mot("1,3,10,20,30,40,0.9,1,1.0");
  EXPECT_EQ(r.frame, 1);
  EXPECT_EQ(r.id, 3);
  EXPECT_EQ(r.box(), (Box{10, 20, 30, 40}));
  EXPECT_EQ(r.conf, 0.9);
  EXPECT_EQ(r.class_id, 1);
  EXPECT_EQ(r.visibility, 1.0);
  EXPECT_EQ(serialize_mot(r), "1,3,10,20,30,40,0.9,1,1");

  const MotRecord d = parse_mot("2,-1,5,5,10,10,0.4,1,1");
  EXPECT_EQ(d.id, -1);
  EXPECT_EQ(d.frame, 2);

  // Ten-column variant: world coordinates ignored.
  const MotRecord w = parse_mot("4,2,1.5,2,3,4,0.7,-1,-1,-1");
  EXPECT_EQ(w.class_id, 1);
  EXPECT_EQ(w.visibility, 1.0);
  EXPECT_EQ(w.conf, 0.7);
}

TEST(ParseMot, ErrorsCarryLineNumber) {
  for (const char* bad : {"1,2,3", "0,1,1,1,1,1,1,1,1", "1,1,1,1,0,1,1,1,1", "1,1,x,1,1,1,1,1,1",
                          "1,1,1,1,1,1,1,1,1,1,1", "1,1,nan,1,1,1,1,1,1"}) {
    try {
      parse_mot(bad, 17);
      ADD_FAILURE() << bad;
    } catch (const ParseError& e) {
      EXPECT_EQ(std::string(e.what()).rfind("line 17:", 0), 0u) << e.what();
    }
  }
  try {
    parse_mot_text("1,1,1,1,1,1,1,1,1\n\n1,1\n", "gt.txt");
    ADD_FAILURE();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("gt.txt: line 3:"), std::string::npos);
  }
}

TEST(ParseMot, RandomRoundTripIsBitExact) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::uniform_int_distribution<int> frame(1, 100000), id(-1, 5000), cls(-1, 10);
  for (int k = 0; k < 1000; ++k) {
    MotRecord r{frame(rng), id(rng), u(rng) - 500.0, u(rng), u(rng) + 1e-3, u(rng) + 1e-3, u(rng) / 1000.0, cls(rng), u(rng) / 1000.0};
    if (k % 3 == 0) {
      r.x = std::round(r.x);
      r.w = std::round(r.w) + 1;
    }
    const std::string line = serialize_mot(r);
    const MotRecord back = parse_mot(line);
    EXPECT_EQ(back, r) << line;
    EXPECT_EQ(serialize_mot(back), line);
  }
}

TEST(KeyValues, ParsesCommentsAndRejectsGarbage) {
  const KeyValues kv = parse_key_values("# c\n a = 1 \n\nb=x y\n", "m");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "x y");
  EXPECT_THROW(parse_key_values("novalue\n", "m"), ParseError);
}

SequenceData sample_sequence(std::uint64_t seed) {
  GenerationSpec spec;
  spec.length = 25;
  spec.auto_crossings = 2;
  const SyntheticSequence s = generate_sequence(spec, seed);
  NoiseConfig noise;
  noise.fp_rate_per_frame = 1.0;
  return make_sequence_data("seq", s, simulate_detections(s, noise, seed), seed | (1ULL << 63), 5);
}

TEST(SequenceDir, RoundTripIsBitExact) {
  const fs::path dir = scratch_dir("roundtrip") / "seq";
  const SequenceData d = sample_sequence(3);
  write_sequence_dir(dir, d);
  const SequenceData back = read_sequence_dir(dir);
  EXPECT_EQ(back.name, "seq");
  EXPECT_EQ(back.length, d.length);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.annotation_stride, 5);
  ASSERT_EQ(back.ground_truth.size(), d.ground_truth.size());
  for (std::size_t k = 0; k < d.ground_truth.size(); ++k) {
    EXPECT_EQ(back.ground_truth[k].frame, d.ground_truth[k].frame);
    EXPECT_EQ(back.ground_truth[k].id, d.ground_truth[k].id);
    EXPECT_EQ(back.ground_truth[k].box, d.ground_truth[k].box);
  }
  for (std::size_t t = 0; t < d.frames.size(); ++t) {
    EXPECT_EQ(back.frames[t].detections, d.frames[t].detections);
    EXPECT_EQ(back.frames[t].features, d.frames[t].features);
  }
  fs::remove_all(dir.parent_path());
}

TEST(SequenceDir, FeaturesAreRequired) {
  const fs::path root = scratch_dir("nofeat");
  write_sequence_dir(root / "seq", sample_sequence(4));
  fs::remove(root / "seq" / "feat.csv");
  EXPECT_THROW(read_sequence_dir(root / "seq"), Error);
  fs::remove_all(root);
}

TEST(SequenceDir, MissingGroundTruthAllowedForTracking) {
  const fs::path root = scratch_dir("nogt");
  write_sequence_dir(root / "seq", sample_sequence(5));
  fs::remove(root / "seq" / "gt.txt");
  EXPECT_THROW(read_sequence_dir(root / "seq", true), Error);
  EXPECT_TRUE(read_sequence_dir(root / "seq", false).ground_truth.empty());
  fs::remove_all(root);
}

TEST(SequenceDir, RejectsInconsistentFeatures) {
  const fs::path root = scratch_dir("badfeat");
  write_sequence_dir(root / "seq", sample_sequence(6));
  write_text_file(root / "seq" / "feat.csv", read_text_file(root / "seq" / "feat.csv") + "999,0,1,2\n");
  EXPECT_THROW(read_sequence_dir(root / "seq"), ParseError);
  fs::remove_all(root);
}

TEST(ListSequences, SortedAndNonEmpty) {
  const fs::path root = scratch_dir("list");
  write_sequence_dir(root / "b", sample_sequence(1));
  write_sequence_dir(root / "a", sample_sequence(2));
  fs::create_directories(root / "junk");
  const auto seqs = list_sequences(root);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].filename(), "a");
  EXPECT_EQ(seqs[1].filename(), "b");
  EXPECT_THROW(list_sequences(root / "junk"), Error);
  fs::remove_all(root);
}

TEST(TrainingView, StripsIdentitiesAndUnannotatedTruth) {
  const SequenceData d = sample_sequence(7);
  const TrainingSequence ts = training_view(d, 5);
  for (int t = 0; t < d.length; ++t) {
    EXPECT_EQ(ts.annotated[static_cast<std::size_t>(t)], t % 5 == 0);
    EXPECT_EQ(ts.frames[static_cast<std::size_t>(t)].ground_truth.empty(), t % 5 != 0);
  }
  SequenceData poisoned = d;
  for (auto& g : poisoned.ground_truth) g.id += 100;
  const TrainingSequence tp = training_view(poisoned, 5);
  for (std::size_t t = 0; t < ts.frames.size(); ++t) EXPECT_EQ(tp.frames[t].ground_truth, ts.frames[t].ground_truth);
  EXPECT_THROW(training_view(d, 0), InvalidArgument);
}

TEST(ResultsToMot, OneBasedFramesAndLabeledRoundTrip) {
  const std::vector<TrackOutput> t{{0, 4, Box{1, 2, 3, 4}, 0.5}, {2, 1, Box{5, 6, 7, 8}, 0.25}};
  const auto recs = results_to_mot(t);
  EXPECT_EQ(recs[0].frame, 1);
  EXPECT_EQ(recs[1].frame, 3);
  const auto lab = to_labeled(recs);
  EXPECT_EQ(lab[1].frame, 2);
  EXPECT_EQ(lab[1].id, 1);
  EXPECT_EQ(lab[1].box, (Box{5, 6, 7, 8}));
}

}  // namespace
}  // namespace walker
