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

#include "walker/config.hpp"

namespace walker {
namespace {

TEST(Presets, BenchmarkColumns) {
  const RunConfig d = preset_config("dancetrack");
  EXPECT_EQ(d.track.tau_inf, 0.07);
  EXPECT_EQ(d.track.beta_high, 0.6);
  EXPECT_EQ(d.track.beta_new, 0.8);
  EXPECT_EQ(d.track.max_inactive, 20);
  EXPECT_EQ(d.track.ema_momentum, 0.8);
  EXPECT_EQ(d.track.det_nms_iou, 0.6);
  EXPECT_EQ(d.train.k_hat, 10);

  const RunConfig m = preset_config("mot17");
  EXPECT_EQ(m.track.beta_new, 0.75);
  EXPECT_EQ(m.track.beta_high, 0.3);
  EXPECT_EQ(m.track.max_inactive, 30);
  EXPECT_EQ(m.track.ema_momentum, 0.5);
  EXPECT_EQ(m.track.det_nms_iou, 0.7);
  EXPECT_EQ(m.train.gamma1, 1.0);
  EXPECT_EQ(m.train.gamma2, 2.0);

  const RunConfig b = preset_config("bdd100k");
  EXPECT_EQ(b.train.gamma1, 0.5);
  EXPECT_EQ(b.train.gamma2, 1.0);
  EXPECT_EQ(b.train.k_hat, 3);
  EXPECT_EQ(b.track.max_inactive, 10);
  EXPECT_EQ(b.track.beta_high, 0.35);

  for (const RunConfig* c : {&d, &m, &b}) {
    EXPECT_EQ(c->train.alpha1, 0.7);
    EXPECT_EQ(c->train.alpha2, 0.3);
    EXPECT_EQ(c->train.beta_obj, 0.3);
    EXPECT_EQ(c->train.beta_cycle, 0.8);
    EXPECT_EQ(c->train.tau, 0.05);
    EXPECT_EQ(c->track.beta_biwalk, 0.2);
    EXPECT_EQ(c->track.beta_iou, 0.5);
    EXPECT_EQ(c->track.lambda_biwalk, 2.0);
    EXPECT_NO_THROW(c->validate());
  }
  EXPECT_THROW(preset_config("kitti"), InvalidArgument);
}

TEST(ParseConfig, PresetThenOverrides) {
  const RunConfig c = parse_config("# comment\npreset = mot17\nbeta_high=0.45\nepochs = 3\nmetric=cosine\n");
  EXPECT_EQ(c.preset, "mot17");
  EXPECT_EQ(c.track.beta_high, 0.45);
  EXPECT_EQ(c.track.beta_new, 0.75);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.track.metric, SimilarityMetric::kCosine);
}

TEST(ParseConfig, Errors) {
  EXPECT_THROW(parse_config(""), ParseError);
  EXPECT_THROW(parse_config("# only comments\n\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nbogus=1\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nepochs=1\nepochs=2\n"), ParseError);
  EXPECT_THROW(parse_config("epochs=1\npreset=mot17\n"), ParseError);
  EXPECT_THROW(parse_config("preset=nope\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nepochs=x\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nmetric=l2\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nalpha2=0.9\n"), ParseError);
  EXPECT_THROW(parse_config("preset=mot17\nnoequals\n"), ParseError);
  // Without a preset every key is required.
  EXPECT_THROW(parse_config("epochs=1\n"), ParseError);
  try {
    parse_config("preset=mot17\n\nbogus=1\n", "run.cfg");
    ADD_FAILURE();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg: line 3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config("/nonexistent/walker.cfg"), Error);
}

TEST(EchoConfig, IsCompleteAndIdempotent) {
  for (const char* p : {"mot17", "dancetrack", "bdd100k"}) {
    RunConfig c = preset_config(p);
    set_config_value(c, "tau_inf", "0.123456789012345");
    set_config_value(c, "seed", "18446744073709551615");
    const std::string once = echo_config(c);
    const RunConfig back = parse_config(once);
    EXPECT_EQ(echo_config(back), once);
    EXPECT_EQ(back.track.tau_inf, 0.123456789012345);
    EXPECT_EQ(back.seed, 18446744073709551615ULL);
    std::size_t lines = 0;
    for (char ch : once) lines += ch == '\n';
    EXPECT_EQ(lines, config_keys().size() + 1);
  }
}

TEST(SetConfigValue, AllKeysRoundTrip) {
  RunConfig c = preset_config("dancetrack");
  for (const auto& k : config_keys()) {
    const std::string v = k.get(c);
    RunConfig d = c;
    set_config_value(d, k.name, v);
    EXPECT_EQ(k.get(d), v) << k.name;
  }
  EXPECT_THROW(set_config_value(c, "nope", "1"), ParseError);
  EXPECT_THROW(set_config_value(c, "seed", "-1"), ParseError);
}

}  // namespace
}  // namespace walker
