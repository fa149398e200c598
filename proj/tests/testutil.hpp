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

#include <random>
#include <vector>

#include "pbd/profile.hpp"

namespace pbd::test {

// Independent count of block/device distributions: choose the first
// partition's block and device counts, recurse on the rest. Kept separate
// from the production enumerator on purpose.
inline long brute_force_config_count(int blocks, int devices) {
  if (blocks == 0 && devices == 0) return 1;
  if (blocks == 0 || devices == 0) return 0;
  long total = 0;
  for (int k = 1; k <= blocks; ++k) {
    for (int d = 1; d <= devices; ++d) {
      total += brute_force_config_count(blocks - k, devices - d);
    }
  }
  return total;
}

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long result = 1;
  for (int i = 0; i < k; ++i) {
    result = result * (n - i) / (i + 1);
  }
  return result;
}

// Profile whose execution time is exactly proportional to the batch size at
// every batch: three samples on a line through the origin, with a floor too
// small to ever bind.
inline ProfileDoc proportional_doc(const std::vector<double>& teacher_full_ms,
                                   const std::vector<double>& student_full_ms, int devices,
                                   int global_batch, double param_bytes = 0.0,
                                   double allreduce_bytes_per_ms = 1.0e6,
                                   double act_bytes_per_sample = 0.0,
                                   double data_load_ms = 0.0) {
  std::vector<BlockProfile> blocks;
  for (size_t i = 0; i < teacher_full_ms.size(); ++i) {
    BlockProfile b;
    b.block_id = static_cast<int>(i);
    for (int denom : {4, 2, 1}) {
      const int batch = global_batch / denom;
      b.teacher_ms[batch] = teacher_full_ms[i] / denom;
      b.student_ms[batch] = student_full_ms[i] / denom;
    }
    b.act_bytes_per_sample = act_bytes_per_sample;
    b.param_bytes = param_bytes;
    b.teacher_param_bytes = param_bytes;
    blocks.push_back(std::move(b));
  }
  ProfileDoc doc;
  doc.bpdg = make_bpdg(std::move(blocks));
  doc.hardware = HardwareSpec{
      .num_devices = devices,
      .link_bytes_per_ms = 1.0e9,
      .allreduce_bytes_per_ms = allreduce_bytes_per_ms,
      .mem_bytes_per_device = 1.0e18,
      .data_load_ms_per_batch = data_load_ms,
      .min_utilization_floor = 1.0e-6,
  };
  doc.global_batch = global_batch;
  return doc;
}

// Arbitrary valid profile for property tests: random block count, batch
// keys, monotone times and hardware.
inline ProfileDoc random_doc(std::mt19937_64& rng, int max_blocks = 6, int max_devices = 6) {
  std::uniform_int_distribution<int> block_count(1, max_blocks);
  std::uniform_int_distribution<int> device_count(1, max_devices);
  std::uniform_int_distribution<int> key_count(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int B = block_count(rng);
  const int N = device_count(rng);

  std::vector<BlockProfile> blocks;
  for (int i = 0; i < B; ++i) {
    BlockProfile b;
    b.block_id = i;
    const int keys = key_count(rng);
    int batch = 8 + static_cast<int>(unit(rng) * 56.0);
    double teacher = 0.2 + 4.0 * unit(rng);
    double student = 0.2 + 4.0 * unit(rng);
    for (int k = 0; k < keys; ++k) {
      b.teacher_ms[batch] = teacher;
      b.student_ms[batch] = student;
      batch += 8 + static_cast<int>(unit(rng) * 120.0);
      teacher += 3.0 * unit(rng);
      student += 3.0 * unit(rng);
    }
    b.act_bytes_per_sample = 1024.0 * unit(rng);
    b.param_bytes = 1.0e5 + 1.0e6 * unit(rng);
    b.teacher_param_bytes = 1.0e5 + 1.0e6 * unit(rng);
    blocks.push_back(std::move(b));
  }

  ProfileDoc doc;
  doc.bpdg = make_bpdg(std::move(blocks));
  doc.hardware = HardwareSpec{
      .num_devices = N,
      .link_bytes_per_ms = 1.0e6 + 1.0e8 * unit(rng),
      .allreduce_bytes_per_ms = 1.0e6 + 1.0e8 * unit(rng),
      .mem_bytes_per_device = 1.0e18,
      .data_load_ms_per_batch = 0.2 * unit(rng),
      .min_utilization_floor = 0.05 + 0.9 * unit(rng),
  };
  doc.global_batch = std::max(N, 32 + static_cast<int>(unit(rng) * 480.0));
  return doc;
}

}  // namespace pbd::test
