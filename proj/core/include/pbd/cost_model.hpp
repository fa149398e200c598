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
#pragma once

#include "pbd/profile.hpp"

namespace pbd {

enum class Role { teacher, student };

// Maps (block, role, batch) to execution time and byte volumes to
// communication time. Immutable after construction; safe to share across
// threads.
class CostModel {
public:
  CostModel(Bpdg bpdg, HardwareSpec hw, int global_batch, double act_mem_multiplier = 3.0);

  explicit CostModel(const ProfileDoc& doc, double act_mem_multiplier = 3.0)
      : CostModel(doc.bpdg, doc.hardware, doc.global_batch, act_mem_multiplier) {}

  const Bpdg& bpdg() const { return bpdg_; }
  const HardwareSpec& hw() const { return hw_; }
  int global_batch() const { return global_batch_; }
  int num_blocks() const { return bpdg_.num_blocks(); }
  double act_mem_multiplier() const { return act_mem_multiplier_; }

  // Piecewise-linear interpolation between measured batch points; linear
  // extrapolation through the two largest points above the largest key;
  // proportional scaling clamped at min_utilization_floor below the smallest.
  double exec_time(int block, Role role, int batch) const;

  // Time to move one block's output activation for `batch` samples across
  // the link. The last block has no successor and is an error.
  double comm_time(int block, int batch) const;

  // Ring-allreduce estimate: 0 for a single device, else
  // 2 (g-1)/g * bytes / allreduce_bytes_per_ms.
  double allreduce_time(double param_bytes, int group_size) const;

  // Per-step gradient-sharing time for the contiguous block range [lo, hi]
  // replicated over `group_size` devices; per-block dpc_ms_override wins
  // over the ring estimate.
  double dpc_time(int lo, int hi, int group_size) const;

  // Resident bytes for blocks [lo, hi] on one device: student and teacher
  // parameters plus act_mem_multiplier activation sets per sample.
  double memory_estimate(int lo, int hi, int per_device_batch) const;

private:
  Bpdg bpdg_;
  HardwareSpec hw_;
  int global_batch_;
  double act_mem_multiplier_;
};

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace pbd
