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
#include "pbd/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace pbd {

using nlohmann::json;

const char* to_string(EventCategory c) {
  switch (c) {
    case EventCategory::data_load: return "data_load";
    case EventCategory::teacher_fwd: return "teacher_fwd";
    case EventCategory::student_fwd_bwd: return "student_fwd_bwd";
    case EventCategory::send: return "send";
    case EventCategory::recv_wait: return "recv_wait";
    case EventCategory::grad_share: return "grad_share";
    case EventCategory::weight_update: return "weight_update";
    case EventCategory::barrier_wait: return "barrier_wait";
    case EventCategory::idle: return "idle";
  }
  return "unknown";
}

namespace {

// One logical timeline shared by every device of a lockstep group. Blocking
// events tile the lane; overlapped sends run concurrently.
struct Lane {
  std::vector<int> devices;
  std::vector<Event> events;
  double free_ms = 0.0;
  double teacher_start_prev = 0.0;  // prefetch anchor for the next step's load
  double teacher_end_step = 0.0;    // boundary activation availability
  double pre_barrier_end = 0.0;
};

void emit(Lane& lane, EventCategory cat, std::optional<int> block, double start, double end,
          int step, int epoch, bool overlapped = false) {
  if (end <= start) return;
  lane.events.push_back(Event{0, cat, block, start, end, step, epoch, overlapped});
  if (!overlapped) lane.free_ms = end;
}

void check_sim_config(const SimConfig& sim) {
  if (sim.steps_per_epoch < 1) throw ValidationError("steps_per_epoch must be >= 1");
  if (sim.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (sim.epoch_sync_ms < 0.0) throw ValidationError("epoch_sync_ms must be >= 0");
  if (sim.weight_update_ms < 0.0) throw ValidationError("weight_update_ms must be >= 0");
}

void epoch_barrier(std::vector<Lane>& lanes, double sync_ms, int step, int epoch) {
  double epoch_end = 0.0;
  for (const Lane& lane : lanes) epoch_end = std::max(epoch_end, lane.free_ms);
  const double sync_end = epoch_end + sync_ms;
  for (Lane& lane : lanes) {
    emit(lane, EventCategory::barrier_wait, std::nullopt, lane.free_ms, sync_end, step, epoch);
    lane.free_ms = sync_end;
  }
}

// Charges a blocking data_load covering whatever part of the load the
// prefetch could not hide, and returns when the batch is ready.
double load_batch(Lane& lane, double share_ms, bool overlap, bool epoch_first, int step,
                  int epoch) {
  const double t = lane.free_ms;
  if (!overlap || epoch_first) {
    emit(lane, EventCategory::data_load, std::nullopt, t, t + share_ms, step, epoch);
    return t + share_ms;
  }
  const double ready = lane.teacher_start_prev + share_ms;
  if (ready > t) {
    emit(lane, EventCategory::data_load, std::nullopt, t, ready, step, epoch);
    return ready;
  }
  return t;
}

SimReport finalize(const CostModel& model, const SimConfig& sim, const std::vector<Lane>& lanes,
                   const std::vector<double>& lane_peak_mem) {
  const int num_devices = model.hw().num_devices;
  SimReport report;
  report.num_devices = num_devices;
  report.sim = sim;
  report.peak_mem_bytes.assign(static_cast<size_t>(num_devices), 0.0);
  report.timelines.assign(static_cast<size_t>(num_devices), {});

  double makespan = 0.0;
  for (const Lane& lane : lanes) {
    for (const Event& ev : lane.events) makespan = std::max(makespan, ev.end_ms);
  }
  report.makespan_ms = makespan;

  for (size_t l = 0; l < lanes.size(); ++l) {
    for (int device : lanes[l].devices) {
      auto& timeline = report.timelines[static_cast<size_t>(device)];
      timeline = lanes[l].events;
      for (Event& ev : timeline) ev.device = device;
      report.peak_mem_bytes[static_cast<size_t>(device)] = lane_peak_mem[l];
    }
  }

  for (size_t d = 0; d < report.timelines.size(); ++d) {
    // Fill the gaps between blocking events with idle so every device's
    // non-overlapped events tile [0, makespan] exactly.
    auto& timeline = report.timelines[d];
    std::vector<Event> filled;
    double cursor = 0.0;
    int last_step = 0;
    int last_epoch = 0;
    for (const Event& ev : timeline) {
      if (ev.overlapped) {
        filled.push_back(ev);
        continue;
      }
      if (ev.start_ms > cursor) {
        filled.push_back(Event{ev.device, EventCategory::idle, std::nullopt, cursor, ev.start_ms,
                               ev.step, ev.epoch, false});
      }
      filled.push_back(ev);
      cursor = ev.end_ms;
      last_step = ev.step;
      last_epoch = ev.epoch;
    }
    if (makespan > cursor) {
      filled.push_back(Event{static_cast<int>(d), EventCategory::idle, std::nullopt, cursor,
                             makespan, last_step, last_epoch, false});
    }
    timeline = std::move(filled);
  }

  for (EventCategory c : kAllCategories) report.category_totals_ms[to_string(c)] = 0.0;
  for (const auto& timeline : report.timelines) {
    for (const Event& ev : timeline) {
      if (ev.overlapped) {
        report.overlapped_send_ms += ev.duration();
      } else {
        report.category_totals_ms[to_string(ev.category)] += ev.duration();
      }
    }
  }

  const double denom = makespan * num_devices;
  if (denom > 0.0) {
    report.bubble_ratio = (report.category_totals_ms["idle"] +
                           report.category_totals_ms["recv_wait"] +
                           report.category_totals_ms["barrier_wait"]) /
                          denom;
  }
  if (sim.steps_per_epoch >= 4) {
    report.steady_state_step_ms = steady_state_step_time(report);
  }
  return report;
}

}  // namespace

SimReport simulate(const CostModel& model, const ScheduleConfig& cfg, const SimConfig& sim) {
  validate_schedule(model, cfg);
  check_sim_config(sim);
  {
    const ConfigCost cost = predicted_step_time(model, cfg);
    if (!cost.feasible) throw InfeasibleError(cost.infeasibility_reason);
  }

  const int P = cfg.num_partitions();
  std::vector<Lane> lanes(static_cast<size_t>(P));
  std::vector<double> lane_peak_mem(static_cast<size_t>(P));
  for (int j = 0; j < P; ++j) {
    lanes[static_cast<size_t>(j)].devices = cfg.partitions[static_cast<size_t>(j)].devices;
    lane_peak_mem[static_cast<size_t>(j)] = model.memory_estimate(
        cfg.partitions[static_cast<size_t>(j)].block_lo,
        cfg.partitions[static_cast<size_t>(j)].block_hi,
        cfg.partitions[static_cast<size_t>(j)].per_device_batch);
  }

  for (int epoch = 0; epoch < sim.epochs; ++epoch) {
    for (int step = 0; step < sim.steps_per_epoch; ++step) {
      for (int j = 0; j < P; ++j) {
        Lane& lane = lanes[static_cast<size_t>(j)];
        const PartitionSpec& part = cfg.partitions[static_cast<size_t>(j)];
        double cur;
        if (j == 0) {
          const double share = model.hw().data_load_ms_per_batch * part.per_device_batch /
                               model.global_batch();
          cur = load_batch(lane, share, sim.overlap_load, step == 0, step, epoch);
        } else {
          const Lane& up = lanes[static_cast<size_t>(j - 1)];
          const PartitionSpec& up_part = cfg.partitions[static_cast<size_t>(j - 1)];
          // The boundary activation is ready once the slower of the sender's
          // egress and this group's ingress completes.
          const double transfer =
              std::max(model.comm_time(up_part.block_hi, up_part.per_device_batch),
                       model.comm_time(up_part.block_hi, part.per_device_batch));
          const double ready = up.teacher_end_step + transfer;
          emit(lane, EventCategory::recv_wait, std::nullopt, lane.free_ms, ready, step, epoch);
          cur = std::max(lane.free_ms, ready);
        }
        lane.teacher_start_prev = cur;

        for (int k = part.block_lo; k <= part.block_hi; ++k) {
          const double d = model.exec_time(k, Role::teacher, part.per_device_batch);
          emit(lane, EventCategory::teacher_fwd, k, cur, cur + d, step, epoch);
          cur += d;
        }
        lane.teacher_end_step = cur;

        if (j + 1 < P) {
          const double egress = model.comm_time(part.block_hi, part.per_device_batch);
          emit(lane, EventCategory::send, part.block_hi, cur, cur + egress, step, epoch,
               /*overlapped=*/sim.overlap_send);
          if (!sim.overlap_send) cur += egress;
        }

        for (int k = part.block_lo; k <= part.block_hi; ++k) {
          const double d = model.exec_time(k, Role::student, part.per_device_batch);
          emit(lane, EventCategory::student_fwd_bwd, k, cur, cur + d, step, epoch);
          cur += d;
        }

        if (part.group_size() > 1) {
          const double d = model.dpc_time(part.block_lo, part.block_hi, part.group_size());
          emit(lane, EventCategory::grad_share, std::nullopt, cur, cur + d, step, epoch);
          cur += d;
        }

        lane.pre_barrier_end = cur;
        if (sim.dpu) {
          emit(lane, EventCategory::weight_update, std::nullopt, cur,
               cur + sim.weight_update_ms, step, epoch);
          lane.free_ms = cur + sim.weight_update_ms;
        }
      }

      if (!sim.dpu) {
        double release = 0.0;
        for (const Lane& lane : lanes) release = std::max(release, lane.pre_barrier_end);
        for (Lane& lane : lanes) {
          emit(lane, EventCategory::barrier_wait, std::nullopt, lane.pre_barrier_end, release,
               step, epoch);
          emit(lane, EventCategory::weight_update, std::nullopt, release,
               release + sim.weight_update_ms, step, epoch);
          lane.free_ms = release + sim.weight_update_ms;
        }
      }
    }
    epoch_barrier(lanes, sim.epoch_sync_ms, sim.steps_per_epoch - 1, epoch);
  }

  return finalize(model, sim, lanes, lane_peak_mem);
}

SimReport simulate_baseline(const CostModel& model, const BaselinePlan& plan,
                            const SimConfig& sim) {
  check_sim_config(sim);
  const int N = model.hw().num_devices;
  const int B = model.num_blocks();

  if (plan.kind == BaselineKind::dp) {
    // All devices mirror one lockstep lane through B sequential phases.
    const int batch = plan.per_device_batch;
    const double share =
        model.hw().data_load_ms_per_batch * batch / model.global_batch();
    std::vector<Lane> lanes(1);
    lanes[0].devices.resize(static_cast<size_t>(N));
    for (int d = 0; d < N; ++d) lanes[0].devices[static_cast<size_t>(d)] = d;
    Lane& lane = lanes[0];

    double peak_mem = 0.0;
    double teacher_params = 0.0;
    for (int i = 0; i < B; ++i) {
      const BlockProfile& b = model.bpdg().block(i);
      teacher_params += b.teacher_param_bytes;
      peak_mem = std::max(peak_mem, teacher_params + b.param_bytes +
                                        b.act_bytes_per_sample * batch *
                                            model.act_mem_multiplier());
    }

    for (int epoch = 0; epoch < sim.epochs; ++epoch) {
      int step_index = 0;
      for (int phase = 0; phase < B; ++phase) {
        for (int s = 0; s < sim.steps_per_epoch; ++s, ++step_index) {
          // Every phase reloads its data; only the first load of a phase is
          // exposed, later ones ride on the previous step's compute.
          double cur = load_batch(lane, share, sim.overlap_load, s == 0, step_index, epoch);
          lane.teacher_start_prev = cur;
          for (int k = 0; k <= phase; ++k) {
            const double d = model.exec_time(k, Role::teacher, batch);
            emit(lane, EventCategory::teacher_fwd, k, cur, cur + d, step_index, epoch);
            cur += d;
          }
          const double ds = model.exec_time(phase, Role::student, batch);
          emit(lane, EventCategory::student_fwd_bwd, phase, cur, cur + ds, step_index, epoch);
          cur += ds;
          if (N > 1) {
            const double dg = model.dpc_time(phase, phase, N);
            emit(lane, EventCategory::grad_share, std::nullopt, cur, cur + dg, step_index, epoch);
            cur += dg;
          }
          emit(lane, EventCategory::weight_update, std::nullopt, cur,
               cur + sim.weight_update_ms, step_index, epoch);
          lane.free_ms = std::max(lane.free_ms, cur + sim.weight_update_ms);
        }
      }
      epoch_barrier(lanes, sim.epoch_sync_ms, step_index - 1, epoch);
    }
    return finalize(model, sim, lanes, {peak_mem});
  }

  // LS: one independent lane per device; full batch everywhere.
  if (static_cast<int>(plan.device_blocks.size()) != N) {
    throw ValidationError("plan device count does not match hardware");
  }
  const int batch = plan.per_device_batch;
  const double share = model.hw().data_load_ms_per_batch * batch / model.global_batch();
  std::vector<Lane> lanes(static_cast<size_t>(N));
  std::vector<double> peak_mem(static_cast<size_t>(N), 0.0);
  for (int d = 0; d < N; ++d) {
    lanes[static_cast<size_t>(d)].devices = {d};
    const auto& assigned = plan.device_blocks[static_cast<size_t>(d)];
    if (assigned.empty()) continue;
    double teacher_params = 0.0;
    for (int k = 0; k <= assigned.back(); ++k) {
      teacher_params += model.bpdg().block(k).teacher_param_bytes;
    }
    double mem = teacher_params;
    for (int i : assigned) {
      const BlockProfile& b = model.bpdg().block(i);
      mem += b.param_bytes + b.act_bytes_per_sample * batch * model.act_mem_multiplier();
    }
    peak_mem[static_cast<size_t>(d)] = mem;
  }

  for (int epoch = 0; epoch < sim.epochs; ++epoch) {
    for (int d = 0; d < N; ++d) {
      Lane& lane = lanes[static_cast<size_t>(d)];
      const auto& assigned = plan.device_blocks[static_cast<size_t>(d)];
      if (assigned.empty()) continue;
      for (int s = 0; s < sim.steps_per_epoch; ++s) {
        double cur = load_batch(lane, share, sim.overlap_load, s == 0, s, epoch);
        lane.teacher_start_prev = cur;
        for (int k = 0; k <= assigned.back(); ++k) {
          const double d_ms = model.exec_time(k, Role::teacher, batch);
          emit(lane, EventCategory::teacher_fwd, k, cur, cur + d_ms, s, epoch);
          cur += d_ms;
        }
        for (int i : assigned) {
          const double d_ms = model.exec_time(i, Role::student, batch);
          emit(lane, EventCategory::student_fwd_bwd, i, cur, cur + d_ms, s, epoch);
          cur += d_ms;
        }
        emit(lane, EventCategory::weight_update, std::nullopt, cur, cur + sim.weight_update_ms,
             s, epoch);
        lane.free_ms = std::max(lane.free_ms, cur + sim.weight_update_ms);
      }
    }
    // Devices with work meet at the epoch barrier; empty devices stay idle.
    double epoch_end = 0.0;
    for (const Lane& lane : lanes) epoch_end = std::max(epoch_end, lane.free_ms);
    const double sync_end = epoch_end + sim.epoch_sync_ms;
    for (int d = 0; d < N; ++d) {
      Lane& lane = lanes[static_cast<size_t>(d)];
      if (plan.device_blocks[static_cast<size_t>(d)].empty()) continue;
      emit(lane, EventCategory::barrier_wait, std::nullopt, lane.free_ms, sync_end,
           sim.steps_per_epoch - 1, epoch);
      lane.free_ms = sync_end;
    }
  }
  return finalize(model, sim, lanes, peak_mem);
}

double steady_state_step_time(const SimReport& report) {
  const int steps = report.sim.steps_per_epoch;
  if (steps < 4) {
    throw ValidationError("too few steps for a steady-state estimate (need >= 4)");
  }
  double result = 0.0;
  bool any = false;
  for (const auto& timeline : report.timelines) {
    std::vector<double> starts(static_cast<size_t>(steps), -1.0);
    for (const Event& ev : timeline) {
      if (ev.category == EventCategory::idle || ev.epoch != 0) continue;
      if (ev.step < 0 || ev.step >= steps) continue;
      if (starts[static_cast<size_t>(ev.step)] < 0.0) {
        starts[static_cast<size_t>(ev.step)] = ev.start_ms;
      }
    }
    const int lo = steps / 4;
    const int hi = 3 * steps / 4;
    std::vector<double> intervals;
    for (int s = lo; s < hi; ++s) {
      if (starts[static_cast<size_t>(s)] < 0.0 || starts[static_cast<size_t>(s + 1)] < 0.0) {
        continue;
      }
      intervals.push_back(starts[static_cast<size_t>(s + 1)] - starts[static_cast<size_t>(s)]);
    }
    if (intervals.empty()) continue;
    const size_t mid = (intervals.size() - 1) / 2;
    std::nth_element(intervals.begin(), intervals.begin() + static_cast<long>(mid),
                     intervals.end());
    result = std::max(result, intervals[mid]);
    any = true;
  }
  if (!any) {
    throw ValidationError("no step intervals found in report");
  }
  return result;
}

double validate_prediction(const SimReport& report, const ConfigCost& cost) {
  const double steady = steady_state_step_time(report);
  return std::abs(steady - cost.step_ms) / cost.step_ms;
}

std::string save_report(const SimReport& report) {
  json j;
  j["num_devices"] = report.num_devices;
  j["makespan_ms"] = report.makespan_ms;
  j["steady_state_step_ms"] = report.steady_state_step_ms;
  j["bubble_ratio"] = report.bubble_ratio;
  j["overlapped_send_ms"] = report.overlapped_send_ms;
  j["category_totals_ms"] = report.category_totals_ms;
  j["peak_mem_bytes"] = report.peak_mem_bytes;
  j["sim"] = {{"steps_per_epoch", report.sim.steps_per_epoch},
              {"epochs", report.sim.epochs},
              {"dpu", report.sim.dpu},
              {"overlap_send", report.sim.overlap_send},
              {"overlap_load", report.sim.overlap_load},
              {"epoch_sync_ms", report.sim.epoch_sync_ms},
              {"weight_update_ms", report.sim.weight_update_ms}};
  json timelines = json::array();
  for (const auto& timeline : report.timelines) {
    json events = json::array();
    for (const Event& ev : timeline) {
      json je;
      je["category"] = to_string(ev.category);
      je["block"] = ev.block ? json(*ev.block) : json(nullptr);
      je["start_ms"] = ev.start_ms;
      je["end_ms"] = ev.end_ms;
      je["step"] = ev.step;
      je["epoch"] = ev.epoch;
      je["overlapped"] = ev.overlapped;
      events.push_back(std::move(je));
    }
    timelines.push_back(std::move(events));
  }
  j["timelines"] = std::move(timelines);
  return j.dump(2) + "\n";
}

}  // namespace pbd
