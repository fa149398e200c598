/* Copyright 2026 The pbd Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "pbd/profile.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

namespace pbd {
namespace {

const char* kMinimalDoc = R"({
  "blocks": [
    {"id": 0, "teacher_ms": {"64": 1.0, "128": 2.0}, "student_ms": {"64": 1.0, "128": 2.0},
     "act_bytes_per_sample": 1024, "param_bytes": 100, "teacher_param_bytes": 50},
    {"id": 1, "teacher_ms": {"64": 1.0, "128": 2.0}, "student_ms": {"64": 1.0, "128": 2.0},
     "act_bytes_per_sample": 2048, "param_bytes": 100, "teacher_param_bytes": 50}
  ],
  "hardware": {"num_devices": 2, "link_bytes_per_ms": 1048576, "allreduce_bytes_per_ms": 1048576,
               "mem_bytes_per_device": 1e9, "data_load_ms_per_batch": 1.0,
               "min_utilization_floor": 0.3},
  "global_batch": 128
})";

TEST(Profile, LoadsMinimalTwoBlockDocument) {
  const ProfileDoc doc = load_profile(kMinimalDoc);
  EXPECT_EQ(doc.bpdg.num_blocks(), 2);
  ASSERT_EQ(doc.bpdg.edges.size(), 1u);
  EXPECT_EQ(doc.bpdg.edges[0].from_block, 0);
  EXPECT_EQ(doc.bpdg.edges[0].to_block, 1);
  EXPECT_DOUBLE_EQ(doc.bpdg.edges[0].act_bytes_per_sample, 1024.0);
  EXPECT_EQ(doc.hardware.num_devices, 2);
  EXPECT_EQ(doc.global_batch, 128);
}

TEST(Profile, RejectsNonContiguousBlockIds) {
  std::string text = kMinimalDoc;
  text.replace(text.find("\"id\": 1"), 7, "\"id\": 2");
  try {
    load_profile(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("non-contiguous block ids"), std::string::npos);
  }
}

TEST(Profile, RejectsNonMonotoneTimes) {
  std::string text = kMinimalDoc;
  const std::string good = "{\"64\": 1.0, \"128\": 2.0}";
  const std::string bad = "{\"64\": 3.0, \"128\": 2.0}";
  text.replace(text.find(good), good.size(), bad);
  try {
    load_profile(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("times non-monotone in batch"), std::string::npos);
  }
}

TEST(Profile, RejectsMismatchedBatchKeys) {
  std::string text = kMinimalDoc;
  const std::string good = "\"student_ms\": {\"64\": 1.0, \"128\": 2.0}";
  text.replace(text.find(good), good.size(), "\"student_ms\": {\"64\": 1.0}");
  try {
    load_profile(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing batch key"), std::string::npos);
  }
}

TEST(Profile, RejectsUnknownKeys) {
  std::string text = kMinimalDoc;
  text.insert(text.rfind('}'), ", \"comment\": \"hi\"");
  EXPECT_THROW(load_profile(text), ValidationError);

  std::string text2 = kMinimalDoc;
  text2.replace(text2.find("\"num_devices\""), 13, "\"gpus\"");
  EXPECT_THROW(load_profile(text2), ValidationError);
}

TEST(Profile, RejectsMalformedJson) {
  EXPECT_THROW(load_profile("{\"blocks\": ["), ValidationError);
  EXPECT_THROW(load_profile(""), ValidationError);
}

TEST(Profile, RejectsBatchSmallerThanDeviceCount) {
  std::string text = kMinimalDoc;
  text.replace(text.find("\"global_batch\": 128"), 19, "\"global_batch\": 1");
  EXPECT_THROW(load_profile(text), ValidationError);
}

TEST(Profile, RoundTripsThroughSerialization) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    ProfileDoc doc = test::random_doc(rng);
    if (i % 3 == 0) doc.bpdg.blocks[0].dpc_ms_override = 0.25;
    const ProfileDoc reloaded = load_profile(save_profile(doc));
    EXPECT_EQ(doc, reloaded);
  }
}

TEST(Profile, SerializationIsByteStable) {
  std::mt19937_64 rng(11);
  const ProfileDoc doc = test::random_doc(rng);
  EXPECT_EQ(save_profile(doc), save_profile(doc));
}

TEST(Synth, UniformShapeHitsScaleAtReferenceBatch) {
  SynthSpec spec;
  spec.blocks = 4;
  spec.scale_ms = 1.0;
  const ProfileDoc doc = synth_profile(spec);
  ASSERT_EQ(doc.bpdg.num_blocks(), 4);
  for (const BlockProfile& b : doc.bpdg.blocks) {
    EXPECT_DOUBLE_EQ(b.teacher_ms.at(256), 1.0);
    EXPECT_DOUBLE_EQ(b.student_ms.at(256), 1.0);
  }
}

TEST(Synth, FrontHeavyWeightsBlockZero) {
  SynthSpec spec;
  spec.shape = SynthShape::front_heavy;
  spec.blocks = 6;
  spec.front_weight = 4.0;
  const ProfileDoc doc = synth_profile(spec);
  for (int i = 1; i < 6; ++i) {
    const BlockProfile& rest = doc.bpdg.blocks[static_cast<size_t>(i)];
    for (const auto& [batch, ms] : doc.bpdg.blocks[0].teacher_ms) {
      EXPECT_DOUBLE_EQ(ms, 4.0 * rest.teacher_ms.at(batch));
    }
  }
}

TEST(Synth, SameSeedGivesByteIdenticalDocuments) {
  SynthSpec spec;
  spec.blocks = 5;
  spec.jitter = 0.2;
  spec.seed = 99;
  EXPECT_EQ(save_profile(synth_profile(spec)), save_profile(synth_profile(spec)));
  spec.seed = 100;
  EXPECT_NE(save_profile(synth_profile(spec)), save_profile(synth_profile(SynthSpec{
                .blocks = 5, .jitter = 0.2, .seed = 99})));
}

TEST(Synth, GeneratedDocumentsPassTheLoader) {
  for (SynthShape shape : {SynthShape::uniform, SynthShape::front_heavy}) {
    SynthSpec spec;
    spec.shape = shape;
    spec.blocks = 6;
    spec.curvature = 0.4;
    spec.jitter = 0.05;
    const std::string text = save_profile(synth_profile(spec));
    EXPECT_NO_THROW(load_profile(text));
  }
}

TEST(Synth, RejectsBadArguments) {
  EXPECT_THROW(synth_profile(SynthSpec{.blocks = 0}), ValidationError);
  SynthSpec custom;
  custom.shape = SynthShape::custom;
  custom.blocks = 3;
  custom.custom_weights = {1.0, 2.0};  // one short
  EXPECT_THROW(synth_profile(custom), ValidationError);
  EXPECT_THROW(synth_shape_from_string("wavy"), ValidationError);
}

}  // namespace
}  // namespace pbd
