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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbd/schedule.hpp"

namespace pbd {

struct SimConfig {
  int steps_per_epoch = 1;
  int epochs = 1;
  bool dpu = true;
  bool overlap_send = true;
  bool overlap_load = true;
  double epoch_sync_ms = 0.0;
  double weight_update_ms = 0.0;

  bool operator==(const SimConfig&) const = default;
};

enum class EventCategory {
  data_load,
  teacher_fwd,
  student_fwd_bwd,
  send,
  recv_wait,
  grad_share,
  weight_update,
  barrier_wait,
  idle,
};

constexpr std::array<EventCategory, 9> kAllCategories = {
    EventCategory::data_load,   EventCategory::teacher_fwd, EventCategory::student_fwd_bwd,
    EventCategory::send,        EventCategory::recv_wait,   EventCategory::grad_share,
    EventCategory::weight_update, EventCategory::barrier_wait, EventCategory::idle,
};

const char* to_string(EventCategory c);

struct Event {
  int device = 0;
  EventCategory category = EventCategory::idle;
  std::optional<int> block;
  double start_ms = 0.0;
  double end_ms = 0.0;
  int step = 0;
  int epoch = 0;
  // Send running concurrently with the sender's own compute; excluded from
  // the per-category accounting so that the busy categories tile the
  // timeline exactly.
  bool overlapped = false;

  double duration() const { return end_ms - start_ms; }
  bool operator==(const Event&) const = default;
};

struct SimReport {
  int num_devices = 0;
  SimConfig sim;
  double makespan_ms = 0.0;
  double steady_state_step_ms = 0.0;   // 0 when fewer than 4 steps per epoch
  double bubble_ratio = 0.0;           // (idle + recv_wait + barrier_wait) / (makespan * N)
  std::map<std::string, double> category_totals_ms;
  double overlapped_send_ms = 0.0;
  std::vector<double> peak_mem_bytes;  // per device
  std::vector<std::vector<Event>> timelines;  // per device, idle-filled, time-ordered
};

/*
 * Event-accurate simulation of the pipelined schedule. Per step, each
 * partition's device group (always in lockstep, every member at the ceiling
 * batch share):
 *
 *   1. the first partition loads its batch share, overlapped with the
 *      previous step's compute except on the first step of an epoch; later
 *      partitions wait for the predecessor's relayed teacher output,
 *   2. teacher forward for every block in range,
 *   3. the boundary activation is sent downstream, concurrent with (4)
 *      unless overlap_send is off,
 *   4. student forward+backward for every block in range,
 *   5. gradient sharing inside groups of two or more devices,
 *   6. weight update, then either the next step starts immediately
 *      (dpu = true) or all devices align on a barrier first.
 *
 * Every epoch ends with a full synchronization of epoch_sync_ms, charged as
 * barrier_wait. Throws InfeasibleError when a partition's memory estimate
 * exceeds device capacity.
 */
SimReport simulate(const CostModel& model, const ScheduleConfig& cfg, const SimConfig& sim);

// DP: sequential per-block phases, each opening with a blocking data load and
// re-running the teacher prefix every step. LS: devices run their own
// full-batch prefix + student workloads independently, meeting only at epoch
// boundaries.
SimReport simulate_baseline(const CostModel& model, const BaselinePlan& plan,
                            const SimConfig& sim);

// Median inter-step interval over the middle half of the first epoch's
// steps, on the device with the largest such median (the pipeline
// bottleneck). Needs at least 4 steps per epoch.
double steady_state_step_time(const SimReport& report);

// |steady state - predicted| / predicted.
double validate_prediction(const SimReport& report, const ConfigCost& cost);

// Report document I/O; keys are sorted so equal reports serialize to
// identical bytes.
std::string save_report(const SimReport& report);

}  // namespace pbd
