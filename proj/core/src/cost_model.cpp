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

#include <algorithm>

namespace pbd {

CostModel::CostModel(Bpdg bpdg, HardwareSpec hw, int global_batch, double act_mem_multiplier)
    : bpdg_(std::move(bpdg)),
      hw_(hw),
      global_batch_(global_batch),
      act_mem_multiplier_(act_mem_multiplier) {
  validate_hardware(hw_);
  if (global_batch_ < 1) {
    throw ValidationError("global_batch must be >= 1");
  }
  if (global_batch_ < hw_.num_devices) {
    throw ValidationError("global_batch must be >= num_devices");
  }
  if (act_mem_multiplier_ < 0.0) {
    throw ValidationError("act_mem_multiplier must be >= 0");
  }
}

double CostModel::exec_time(int block, Role role, int batch) const {
  if (batch < 1) {
    throw ValidationError("batch must be >= 1");
  }
  const BlockProfile& b = bpdg_.block(block);
  const std::map<int, double>& m = role == Role::teacher ? b.teacher_ms : b.student_ms;
  const double x = static_cast<double>(batch);

  const auto [min_batch, min_ms] = *m.begin();
  if (batch <= min_batch) {
    if (batch == min_batch) return min_ms;
    return std::max(min_ms * x / min_batch, min_ms * hw_.min_utilization_floor);
  }
  const auto [max_batch, max_ms] = *m.rbegin();
  if (batch >= max_batch) {
    if (batch == max_batch) return max_ms;
    if (m.size() == 1) {
      return max_ms * x / max_batch;  // single point: scale through the origin
    }
    const auto [b1, t1] = *std::next(m.rbegin());
    const double slope = (max_ms - t1) / (max_batch - b1);
    return max_ms + slope * (x - max_batch);
  }
  auto hi = m.lower_bound(batch);
  if (hi->first == batch) return hi->second;
  auto lo = std::prev(hi);
  const double frac = (x - lo->first) / (hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

double CostModel::comm_time(int block, int batch) const {
  if (batch < 1) {
    throw ValidationError("batch must be >= 1");
  }
  const BlockProfile& b = bpdg_.block(block);
  if (block + 1 >= num_blocks()) {
    throw ValidationError("block " + std::to_string(block) + " has no successor");
  }
  return b.act_bytes_per_sample * static_cast<double>(batch) / hw_.link_bytes_per_ms;
}

double CostModel::allreduce_time(double param_bytes, int group_size) const {
  if (group_size < 1) {
    throw ValidationError("group_size must be >= 1");
  }
  if (group_size == 1) return 0.0;
  const double g = static_cast<double>(group_size);
  return 2.0 * (g - 1.0) / g * param_bytes / hw_.allreduce_bytes_per_ms;
}

double CostModel::dpc_time(int lo, int hi, int group_size) const {
  if (group_size == 1) return 0.0;
  double total = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const BlockProfile& b = bpdg_.block(k);
    total += b.dpc_ms_override ? *b.dpc_ms_override : allreduce_time(b.param_bytes, group_size);
  }
  return total;
}

double CostModel::memory_estimate(int lo, int hi, int per_device_batch) const {
  if (lo > hi) {
    throw ValidationError("empty block range");
  }
  if (per_device_batch < 0) {
    throw ValidationError("per_device_batch must be >= 0");
  }
  double total = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const BlockProfile& b = bpdg_.block(k);
    total += b.param_bytes + b.teacher_param_bytes +
             b.act_bytes_per_sample * per_device_batch * act_mem_multiplier_;
  }
  return total;
}

}  // namespace pbd
