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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbd/errors.hpp"

namespace pbd {

// Measured per-block execution profile. Times are milliseconds, keyed by
// batch size in samples; teacher and student must be sampled at the same
// batch sizes and be non-decreasing in batch.
struct BlockProfile {
  int block_id = 0;
  std::map<int, double> teacher_ms;
  std::map<int, double> student_ms;
  double act_bytes_per_sample = 0.0;
  double param_bytes = 0.0;
  double teacher_param_bytes = 0.0;
  // Measured gradient-sharing time; when set, replaces the ring-allreduce
  // estimate for this block in any group of two or more devices.
  std::optional<double> dpc_ms_override;

  bool operator==(const BlockProfile&) const = default;
};

// Edge between consecutive blocks; carries the activation payload that is
// relayed from `from_block` to `to_block`.
struct BpdgEdge {
  int from_block = 0;
  int to_block = 0;
  double act_bytes_per_sample = 0.0;

  bool operator==(const BpdgEdge&) const = default;
};

// Blockwise pipeline dependency graph: an ordered chain of (teacher, student)
// block pairs with one edge between each consecutive pair.
struct Bpdg {
  std::vector<BlockProfile> blocks;
  std::vector<BpdgEdge> edges;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  const BlockProfile& block(int id) const;

  bool operator==(const Bpdg&) const = default;
};

struct HardwareSpec {
  int num_devices = 1;
  double link_bytes_per_ms = 1.0;
  double allreduce_bytes_per_ms = 1.0;
  double mem_bytes_per_device = 1.0;
  double data_load_ms_per_batch = 0.0;
  // Clamp for execution-time extrapolation below the smallest measured batch;
  // a batch never runs faster than this fraction of the smallest measurement.
  double min_utilization_floor = 1.0;

  bool operator==(const HardwareSpec&) const = default;
};

// Parsed contents of a profile document.
struct ProfileDoc {
  Bpdg bpdg;
  HardwareSpec hardware;
  int global_batch = 1;

  bool operator==(const ProfileDoc&) const = default;
};

// Builds the edge list from the block chain and checks every invariant.
// Throws ValidationError naming the violated invariant.
Bpdg make_bpdg(std::vector<BlockProfile> blocks);

void validate_hardware(const HardwareSpec& hw);

// Parses a UTF-8 JSON profile document. Unknown keys are rejected.
ProfileDoc load_profile(const std::string& text);
ProfileDoc load_profile_file(const std::string& path);

// Serializes with sorted keys and 2-space indent; byte-stable for equal
// inputs, and load_profile(save_profile(x)) == x.
std::string save_profile(const ProfileDoc& doc);

enum class SynthShape { uniform, front_heavy, custom };

SynthShape synth_shape_from_string(const std::string& s);

// Knobs for the synthetic profile generator. Execution time at batch b is
//   scale_ms * weight_i * (curvature + (1 - curvature) * b / reference_batch)
// sampled at reference_batch/4, /2 and /1, so curvature = 0 gives an exactly
// batch-proportional profile and larger values model the fixed per-step
// overhead that makes small batches under-utilize the device.
struct SynthSpec {
  SynthShape shape = SynthShape::uniform;
  int blocks = 1;
  double scale_ms = 1.0;
  double front_weight = 4.0;                // front_heavy: block 0 weight
  std::vector<double> custom_weights;       // custom: per-block weights
  double curvature = 0.0;
  double jitter = 0.0;                      // relative, applied per entry
  std::uint64_t seed = 0;
  int reference_batch = 256;
  double student_teacher_ratio = 1.0;       // S_i = ratio * T_i
  double act_bytes_per_sample = 4096.0;
  double param_bytes = 1.0e6;
  double teacher_param_bytes = 2.0e6;
  HardwareSpec hardware{
      .num_devices = 4,
      .link_bytes_per_ms = 1.0e8,
      .allreduce_bytes_per_ms = 4.0e7,
      .mem_bytes_per_device = 1.0e15,
      .data_load_ms_per_batch = 0.05,
      .min_utilization_floor = 0.25,
  };
  int global_batch = 256;
};

// Deterministic for a given spec; equal specs produce byte-identical
// documents.
ProfileDoc synth_profile(const SynthSpec& spec);

}  // namespace pbd
