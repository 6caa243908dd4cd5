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
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "walker/io.hpp"

#ifndef WALKER_CLI_PATH
#error "WALKER_CLI_PATH must point at the walker_cli binary"
#endif

namespace walker {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("walker_cli_test_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // Runs the CLI with stdout/stderr captured into files under the scratch root.
  int run(const std::string& args) {
    const std::string cmd = std::string(WALKER_CLI_PATH) + " " + args + " > " + (root_ / "stdout").string() +
                            " 2> " + (root_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out() const { return read_text_file(root_ / "stdout"); }
  std::string err() const { return read_text_file(root_ / "stderr"); }
  std::string p(const std::string& rel) const { return (root_ / rel).string(); }

  static constexpr const char* kSmall =
      "--preset dancetrack --set sequences=2 --set length=20 --set objects=4 --set crossings=2 --set epochs=2";

  fs::path root_;
};

TEST_F(CliTest, SynthTrainTrackEval) {
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --out " + p("data")), 0) << err();
  ASSERT_EQ(list_sequences(root_ / "data").size(), 2u);
  ASSERT_EQ(run(std::string("train ") + kSmall + " --dataset " + p("data") + " --out " + p("model.txt")), 0)
      << err();
  EXPECT_TRUE(fs::exists(root_ / "model.txt.loss.csv"));
  ASSERT_EQ(run(std::string("track ") + kSmall + " --in " + p("data") + " --model " + p("model.txt") +
                " --out " + p("res")),
            0)
      << err();
  for (const auto& seq : list_sequences(root_ / "data")) {
    const fs::path res = root_ / "res" / (seq.filename().string() + ".txt");
    ASSERT_TRUE(fs::exists(res));
    const auto recs = read_mot(res);
    EXPECT_FALSE(recs.empty());
    for (const auto& r : recs) {
      EXPECT_GE(r.frame, 1);
      EXPECT_GE(r.id, 0);
      EXPECT_GT(r.w, 0.0);
    }
    ASSERT_EQ(run("eval --gt " + (seq / "gt.txt").string() + " --pred " + res.string() + " --out " +
                  p("report.txt")),
              0)
        << err();
    const KeyValues kv = parse_key_values(read_text_file(root_ / "report.txt"), "report");
    EXPECT_GT(text::parse_double(kv.at("mota")), 0.0);
    EXPECT_LE(text::parse_double(kv.at("idf1")), 1.0);
  }
}

TEST_F(CliTest, EvalOfGroundTruthAgainstItselfIsPerfect) {
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --out " + p("data")), 0) << err();
  const std::string gt = (list_sequences(root_ / "data")[0] / "gt.txt").string();
  ASSERT_EQ(run("eval --gt " + gt + " --pred " + gt), 0) << err();
  EXPECT_NE(out().find("mota=1\n"), std::string::npos) << out();
  EXPECT_NE(out().find("idf1=1\n"), std::string::npos);
  EXPECT_NE(out().find("id_switches=0\n"), std::string::npos);
}

TEST_F(CliTest, EchoedConfigReproducesResultsBitForBit) {
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --out " + p("data") + " --config-out " + p("run.cfg")), 0)
      << err();
  ASSERT_EQ(run("train --config " + p("run.cfg") + " --dataset " + p("data") + " --out " + p("m1.txt")), 0)
      << err();
  ASSERT_EQ(run("track --config " + p("run.cfg") + " --in " + p("data") + " --model " + p("m1.txt") +
                " --out " + p("r1")),
            0);
  ASSERT_EQ(run("train --config " + p("run.cfg") + " --dataset " + p("data") + " --out " + p("m2.txt") +
                " --parallel 2"),
            0);
  ASSERT_EQ(run("track --config " + p("run.cfg") + " --in " + p("data") + " --model " + p("m2.txt") +
                " --out " + p("r2") + " --parallel 2"),
            0);
  EXPECT_EQ(read_text_file(root_ / "m1.txt"), read_text_file(root_ / "m2.txt"));
  for (const auto& e : fs::directory_iterator(root_ / "r1")) {
    EXPECT_EQ(read_text_file(e.path()), read_text_file(root_ / "r2" / e.path().filename()));
  }
  // The echo printed on stdout is itself a loadable configuration.
  ASSERT_EQ(run("synth --config " + p("run.cfg") + " --out " + p("data2")), 0);
  write_text_file(root_ / "echo.cfg", out().substr(0, out().find("wrote ")));
  ASSERT_EQ(run("synth --config " + p("echo.cfg") + " --out " + p("data3")), 0) << err();
  for (const auto& seq : list_sequences(root_ / "data")) {
    for (const char* f : {"gt.txt", "det.txt", "feat.csv", "meta.txt"}) {
      EXPECT_EQ(read_text_file(seq / f), read_text_file(root_ / "data3" / seq.filename() / f));
    }
  }
}

TEST_F(CliTest, InspectGraphWritesMatrices) {
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --set train_stride=1 --set annotation_stride=1 --out " +
                p("data")),
            0);
  const std::string seq = list_sequences(root_ / "data")[0].string();
  ASSERT_EQ(run(std::string("inspect-graph ") + kSmall + " --set train_stride=1 --in " + seq +
                " --key 1 --ref 2 --out " + p("g.csv")),
            0)
      << err();
  const std::string csv = read_text_file(root_ / "g.csv");
  for (const char* s : {"forward,", "backward,", "cycle,", "loss,total"}) {
    EXPECT_NE(csv.find(s), std::string::npos) << s;
  }
}

TEST_F(CliTest, ErrorsExitNonZero) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_NE(run("eval --gt " + p("missing.txt") + " --pred " + p("missing.txt")), 0);
  EXPECT_NE(err().find("error:"), std::string::npos);
  EXPECT_NE(run("synth --preset nope --out " + p("x")), 0);
  EXPECT_NE(run("synth --set bogus=1 --out " + p("x")), 0);
  EXPECT_NE(run("synth --preset mot17 --config " + p("c.cfg") + " --out " + p("x")), 0);
  write_text_file(root_ / "bad.txt", "1,1,1,1,1,1,1,1,1\n1,2,3\n");
  EXPECT_NE(run("eval --gt " + p("bad.txt") + " --pred " + p("bad.txt")), 0);
  EXPECT_NE(err().find("line 2"), std::string::npos) << err();
  EXPECT_NE(run("track --in " + p("nowhere") + " --out " + p("r.txt")), 0);
}

}  // namespace
}  // namespace walker
