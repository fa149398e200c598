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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbd/cost_model.hpp"

namespace pbd {

// A contiguous block range replicated over a device group; each device
// processes per_device_batch samples of every step's batch.
struct PartitionSpec {
  int block_lo = 0;
  int block_hi = 0;  // inclusive
  std::vector<int> devices;
  int per_device_batch = 0;

  int num_blocks() const { return block_hi - block_lo + 1; }
  int group_size() const { return static_cast<int>(devices.size()); }

  bool operator==(const PartitionSpec&) const = default;
};

struct ScheduleFlags {
  bool tr = true;
  bool dpu = true;
  bool ahd = true;

  bool operator==(const ScheduleFlags&) const = default;
};

// How the winning schedule was found; informational only and excluded from
// the serialized schedule document.
struct SearchProvenance {
  double search_cost_ms = 0.0;
  long configs_evaluated = 0;
};

struct ScheduleConfig {
  std::vector<PartitionSpec> partitions;
  ScheduleFlags flags;
  SearchProvenance provenance;

  int num_partitions() const { return static_cast<int>(partitions.size()); }

  bool operator==(const ScheduleConfig& o) const {
    return partitions == o.partitions && flags == o.flags;  // provenance excluded
  }
};

struct ConfigCost {
  std::vector<double> partition_ms;
  double step_ms = 0.0;  // max over partitions
  bool feasible = true;
  std::string infeasibility_reason;

  bool operator==(const ConfigCost&) const = default;
};

// Baseline execution plans (no pipelining).
enum class BaselineKind { dp, ls };

struct BaselinePlan {
  BaselineKind kind = BaselineKind::dp;
  int per_device_batch = 0;  // dp: ceil(b/N); ls: the full batch
  // dp: per-step cost of each sequential phase (teacher prefix + student +
  // gradient sharing), one entry per block.
  std::vector<double> phase_step_ms;
  // ls: blocks assigned to each device (ascending), and the per-step cost of
  // running its teacher prefix plus its students.
  std::vector<std::vector<int>> device_blocks;
  std::vector<double> device_step_ms;
  // dp: sum of phase step times; ls: max over devices.
  double step_ms = 0.0;
};

// Every way of cutting B blocks into contiguous partitions and dealing all N
// devices into ordered groups, in canonical form (device ids ascending within
// and across groups). Order: fewer partitions first, then block boundaries,
// then group sizes, each lexicographically. Total count is C(B+N-2, B-1).
// per_device_batch is filled as ceil(global_batch / group) when global_batch
// is nonzero.
std::vector<ScheduleConfig> enumerate_configs(int blocks, int devices, int global_batch = 0);

// Checks block coverage, device ids and batch sizes against the model.
void validate_schedule(const CostModel& model, const ScheduleConfig& cfg);

// The partition-time equation: sum over blocks of per-device teacher plus
// student time at the partition's batch share, plus gradient-sharing time.
double partition_cost(const CostModel& model, const PartitionSpec& p);

ConfigCost predicted_step_time(const CostModel& model, const ScheduleConfig& cfg);

struct SearchOptions {
  // Restrict to the contiguous subspace: one device per partition, all
  // devices used (requires B >= N to be non-empty).
  bool contiguous_only = false;
  // 0 = use PBD_THREADS, falling back to the hardware concurrency.
  int threads = 0;
};

// Exhaustive argmin of predicted step time over enumerate_configs. Ties go to
// fewer partitions, then smaller block boundaries, then smaller leading group
// sizes. Deterministic for any thread count. Throws InfeasibleError when no
// configuration fits in device memory.
std::pair<ScheduleConfig, ConfigCost> best_schedule(const CostModel& model,
                                                    const SearchOptions& opts = {});

// Sequential block-by-block data-parallel baseline: phase i runs teacher
// blocks 0..i and student i on all devices at batch/N.
BaselinePlan dp_schedule(const CostModel& model);

// Layerwise-scheduling baseline: blocks are packed onto devices by
// longest-processing-time-first (weight = full-batch teacher + student time,
// ties to the lower block id); each device runs its own teacher prefix.
BaselinePlan ls_schedule(const CostModel& model);

// Internal relaying: the single-partition point of the search space (all
// blocks on all devices, batch split N ways).
ScheduleConfig ir_schedule(const CostModel& model);

// Largest relative change across all measured (block, role, batch) entries.
// Structures must match exactly.
double profile_drift(const Bpdg& reference, const Bpdg& observed);

// Re-runs the search on the observed profile when the drift exceeds the
// threshold; otherwise the current schedule stands.
std::optional<ScheduleConfig> reconfigure(const CostModel& model, const ScheduleConfig& current,
                                          const ProfileDoc& observed, double threshold);

// Schedule document I/O; save(load(s)) round-trips byte-exactly.
std::string save_schedule(const ScheduleConfig& cfg, const ConfigCost& cost);
std::pair<ScheduleConfig, ConfigCost> load_schedule(const std::string& text);
std::pair<ScheduleConfig, ConfigCost> load_schedule_file(const std::string& path);

}  // namespace pbd
