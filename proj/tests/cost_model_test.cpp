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
#include "pbd/cost_model.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

namespace pbd {
namespace {

constexpr double kTol = 1e-9;

BlockProfile block_with(std::map<int, double> times, double act = 0.0, double params = 0.0,
                        double teacher_params = 0.0) {
  BlockProfile b;
  b.teacher_ms = times;
  b.student_ms = std::move(times);
  b.act_bytes_per_sample = act;
  b.param_bytes = params;
  b.teacher_param_bytes = teacher_params;
  return b;
}

CostModel model_of(std::vector<BlockProfile> blocks, HardwareSpec hw, int global_batch) {
  for (size_t i = 0; i < blocks.size(); ++i) blocks[i].block_id = static_cast<int>(i);
  return CostModel(make_bpdg(std::move(blocks)), hw, global_batch);
}

HardwareSpec basic_hw(double floor = 0.3) {
  return HardwareSpec{.num_devices = 2,
                      .link_bytes_per_ms = 1048576.0,
                      .allreduce_bytes_per_ms = 1.0e5,
                      .mem_bytes_per_device = 1.0e12,
                      .data_load_ms_per_batch = 0.0,
                      .min_utilization_floor = floor};
}

TEST(ExecTime, InterpolatesLinearlyBetweenKeys) {
  const CostModel m = model_of({block_with({{64, 1.0}, {128, 2.0}})}, basic_hw(), 256);
  EXPECT_NEAR(m.exec_time(0, Role::teacher, 96), 1.5, kTol);
}

TEST(ExecTime, ClampsAtUtilizationFloorBelowSmallestKey) {
  const CostModel m = model_of({block_with({{64, 1.0}})}, basic_hw(0.3), 256);
  // proportional part would be 0.25, floor gives 0.3
  EXPECT_NEAR(m.exec_time(0, Role::teacher, 16), 0.3, kTol);
}

TEST(ExecTime, ExtrapolatesThroughTwoLargestPoints) {
  const CostModel m = model_of({block_with({{64, 1.0}, {128, 2.0}})}, basic_hw(), 256);
  EXPECT_NEAR(m.exec_time(0, Role::teacher, 256), 4.0, kTol);
}

TEST(ExecTime, ReturnsMeasuredValueAtEveryKey) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i) {
    const ProfileDoc doc = test::random_doc(rng);
    const CostModel m(doc);
    for (const BlockProfile& b : doc.bpdg.blocks) {
      for (const auto& [batch, ms] : b.teacher_ms) {
        EXPECT_NEAR(m.exec_time(b.block_id, Role::teacher, batch), ms, kTol);
      }
      for (const auto& [batch, ms] : b.student_ms) {
        EXPECT_NEAR(m.exec_time(b.block_id, Role::student, batch), ms, kTol);
      }
    }
  }
}

TEST(ExecTime, MonotoneNonDecreasingInBatch) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> batch_dist(1, 1024);
  for (int i = 0; i < 40; ++i) {
    const ProfileDoc doc = test::random_doc(rng);
    const CostModel m(doc);
    for (const BlockProfile& b : doc.bpdg.blocks) {
      for (int trial = 0; trial < 20; ++trial) {
        int lo = batch_dist(rng);
        int hi = batch_dist(rng);
        if (lo > hi) std::swap(lo, hi);
        for (Role role : {Role::teacher, Role::student}) {
          EXPECT_LE(m.exec_time(b.block_id, role, lo),
                    m.exec_time(b.block_id, role, hi) + kTol);
        }
      }
    }
  }
}

TEST(ExecTime, RejectsBadArguments) {
  const CostModel m = model_of({block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_THROW(m.exec_time(1, Role::teacher, 64), ValidationError);
  EXPECT_THROW(m.exec_time(0, Role::teacher, 0), ValidationError);
}

TEST(CommTime, MatchesBytesOverBandwidth) {
  const CostModel m =
      model_of({block_with({{64, 1.0}}, 1024.0), block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_NEAR(m.comm_time(0, 256), 0.25, kTol);  // 1024*256 / 2^20
}

TEST(CommTime, LastBlockHasNoSuccessor) {
  const CostModel m =
      model_of({block_with({{64, 1.0}}, 1024.0), block_with({{64, 1.0}})}, basic_hw(), 256);
  try {
    m.comm_time(1, 64);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no successor"), std::string::npos);
  }
  EXPECT_THROW(m.comm_time(0, 0), ValidationError);
}

TEST(CommTime, ZeroPayloadCostsNothing) {
  const CostModel m =
      model_of({block_with({{64, 1.0}}, 0.0), block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_DOUBLE_EQ(m.comm_time(0, 256), 0.0);
}

TEST(CommTime, LinearInBytes) {
  const CostModel a =
      model_of({block_with({{64, 1.0}}, 512.0), block_with({{64, 1.0}})}, basic_hw(), 256);
  const CostModel b =
      model_of({block_with({{64, 1.0}}, 1024.0), block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_NEAR(2.0 * a.comm_time(0, 128), b.comm_time(0, 128), kTol);
}

TEST(Allreduce, SingleDeviceIsFree) {
  const CostModel m = model_of({block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_DOUBLE_EQ(m.allreduce_time(1.0e9, 1), 0.0);
  EXPECT_DOUBLE_EQ(m.allreduce_time(0.0, 1), 0.0);
}

TEST(Allreduce, RingFormula) {
  const CostModel m = model_of({block_with({{64, 1.0}})}, basic_hw(), 256);
  EXPECT_NEAR(m.allreduce_time(1.0e6, 2), 10.0, kTol);  // 2*(1/2)*10
  EXPECT_NEAR(m.allreduce_time(1.0e6, 4), 15.0, kTol);  // 2*(3/4)*10
  EXPECT_NEAR(m.allreduce_time(2.0e6, 4), 2.0 * m.allreduce_time(1.0e6, 4), kTol);
}

TEST(Dpc, OverrideReplacesRingEstimate) {
  BlockProfile b = block_with({{64, 1.0}}, 0.0, 1.0e6);
  b.dpc_ms_override = 0.7;
  const CostModel m = model_of({b}, basic_hw(), 256);
  EXPECT_DOUBLE_EQ(m.dpc_time(0, 0, 2), 0.7);
  EXPECT_DOUBLE_EQ(m.dpc_time(0, 0, 1), 0.0);
  const CostModel no_override = model_of({block_with({{64, 1.0}}, 0.0, 1.0e6)}, basic_hw(), 256);
  EXPECT_NEAR(no_override.dpc_time(0, 0, 2), 10.0, kTol);
}

TEST(MemoryEstimate, SumsParamsAndActivations) {
  const CostModel m = model_of({block_with({{64, 1.0}}, 2.0, 100.0, 50.0)}, basic_hw(), 256);
  EXPECT_NEAR(m.memory_estimate(0, 0, 10), 210.0, kTol);  // 100 + 50 + 2*10*3
  EXPECT_NEAR(m.memory_estimate(0, 0, 0), 150.0, kTol);
}

TEST(MemoryEstimate, AdditiveOverBlocks) {
  const CostModel m = model_of({block_with({{64, 1.0}}, 2.0, 100.0, 50.0),
                                block_with({{64, 1.0}}, 2.0, 100.0, 50.0)},
                               basic_hw(), 256);
  EXPECT_NEAR(m.memory_estimate(0, 1, 10), 2.0 * m.memory_estimate(0, 0, 10), kTol);
  EXPECT_THROW(m.memory_estimate(1, 0, 10), ValidationError);
}

TEST(CostModel, RejectsBatchSmallerThanDevices) {
  EXPECT_THROW(model_of({block_with({{64, 1.0}})}, basic_hw(), 1), ValidationError);
}

}  // namespace
}  // namespace pbd
