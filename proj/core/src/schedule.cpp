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
#include "pbd/schedule.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace pbd {

using nlohmann::json;

namespace {

// All ways to write `total` as an ordered sum of `parts` positive integers,
// lexicographically.
void compositions(int total, int parts, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
  if (parts == 1) {
    cur.push_back(total);
    emit(cur);
    cur.pop_back();
    return;
  }
  for (int first = 1; first <= total - (parts - 1); ++first) {
    cur.push_back(first);
    compositions(total - first, parts - 1, cur, emit);
    cur.pop_back();
  }
}

ScheduleConfig build_config(const std::vector<int>& block_sizes, const std::vector<int>& group_sizes,
                            int global_batch) {
  ScheduleConfig cfg;
  int block = 0;
  int device = 0;
  for (size_t p = 0; p < block_sizes.size(); ++p) {
    PartitionSpec part;
    part.block_lo = block;
    part.block_hi = block + block_sizes[p] - 1;
    part.devices.resize(static_cast<size_t>(group_sizes[p]));
    std::iota(part.devices.begin(), part.devices.end(), device);
    part.per_device_batch = global_batch > 0 ? ceil_div(global_batch, group_sizes[p]) : 0;
    block += block_sizes[p];
    device += group_sizes[p];
    cfg.partitions.push_back(std::move(part));
  }
  return cfg;
}

int env_thread_cap() {
  const char* env = std::getenv("PBD_THREADS");
  if (env == nullptr) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 1;
}

}  // namespace

void validate_schedule(const CostModel& model, const ScheduleConfig& cfg) {
  const int B = model.num_blocks();
  const int N = model.hw().num_devices;
  if (cfg.partitions.empty()) {
    throw ValidationError("schedule has no partitions");
  }
  int next_block = 0;
  std::vector<bool> used(static_cast<size_t>(N), false);
  for (const PartitionSpec& p : cfg.partitions) {
    if (p.block_lo != next_block || p.block_hi < p.block_lo) {
      throw ValidationError("schedule partitions must cover blocks contiguously in order");
    }
    next_block = p.block_hi + 1;
    if (p.devices.empty()) {
      throw ValidationError("partition has an empty device group");
    }
    for (int d : p.devices) {
      if (d < 0 || d >= N) {
        throw ValidationError("device id " + std::to_string(d) + " out of range");
      }
      if (used[static_cast<size_t>(d)]) {
        throw ValidationError("device id " + std::to_string(d) + " assigned twice");
      }
      used[static_cast<size_t>(d)] = true;
    }
    if (p.per_device_batch < 1) {
      throw ValidationError("per_device_batch must be >= 1");
    }
  }
  if (next_block != B) {
    throw ValidationError("schedule covers " + std::to_string(next_block) + " blocks, model has " +
                          std::to_string(B));
  }
}

std::vector<ScheduleConfig> enumerate_configs(int blocks, int devices, int global_batch) {
  if (blocks < 1 || devices < 1) {
    throw ValidationError("blocks and devices must be >= 1");
  }
  std::vector<ScheduleConfig> out;
  const int max_parts = std::min(blocks, devices);
  for (int parts = 1; parts <= max_parts; ++parts) {
    std::vector<std::vector<int>> block_comps;
    std::vector<std::vector<int>> group_comps;
    std::vector<int> cur;
    compositions(blocks, parts, cur, [&](const std::vector<int>& c) { block_comps.push_back(c); });
    compositions(devices, parts, cur, [&](const std::vector<int>& c) { group_comps.push_back(c); });
    for (const auto& bc : block_comps) {
      for (const auto& gc : group_comps) {
        out.push_back(build_config(bc, gc, global_batch));
      }
    }
  }
  return out;
}

double partition_cost(const CostModel& model, const PartitionSpec& p) {
  if (p.per_device_batch < 1) {
    throw ValidationError("per_device_batch must be >= 1");
  }
  double total = 0.0;
  for (int k = p.block_lo; k <= p.block_hi; ++k) {
    total += model.exec_time(k, Role::teacher, p.per_device_batch);
    total += model.exec_time(k, Role::student, p.per_device_batch);
  }
  return total + model.dpc_time(p.block_lo, p.block_hi, p.group_size());
}

ConfigCost predicted_step_time(const CostModel& model, const ScheduleConfig& cfg) {
  ConfigCost cost;
  for (size_t j = 0; j < cfg.partitions.size(); ++j) {
    const PartitionSpec& p = cfg.partitions[j];
    cost.partition_ms.push_back(partition_cost(model, p));
    const double mem = model.memory_estimate(p.block_lo, p.block_hi, p.per_device_batch);
    if (cost.feasible && mem > model.hw().mem_bytes_per_device) {
      cost.feasible = false;
      std::ostringstream reason;
      reason << "partition " << j << " (blocks " << p.block_lo << "-" << p.block_hi << ", "
             << p.group_size() << " devices): memory estimate " << mem << " B exceeds capacity "
             << model.hw().mem_bytes_per_device << " B";
      cost.infeasibility_reason = reason.str();
    }
  }
  cost.step_ms = *std::max_element(cost.partition_ms.begin(), cost.partition_ms.end());
  return cost;
}

std::pair<ScheduleConfig, ConfigCost> best_schedule(const CostModel& model,
                                                    const SearchOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ScheduleConfig> configs =
      enumerate_configs(model.num_blocks(), model.hw().num_devices, model.global_batch());
  if (opts.contiguous_only) {
    std::erase_if(configs, [&](const ScheduleConfig& c) {
      if (c.num_partitions() != model.hw().num_devices) return true;
      for (const PartitionSpec& p : c.partitions) {
        if (p.group_size() != 1) return true;
      }
      return false;
    });
    if (configs.empty()) {
      throw InfeasibleError(
          "no feasible configuration: contiguous-only search needs at least as many blocks as "
          "devices");
    }
  }

  int threads = opts.threads;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  const int cap = env_thread_cap();  // PBD_THREADS caps the parallelism
  if (cap > 0) threads = std::min(threads, cap);
  threads = std::min<int>(threads, static_cast<int>(configs.size()));

  // Winner = lexicographic min of (step time, enumeration index); the index
  // encodes the tie-break order, so the merge is associative and the result
  // does not depend on the thread count.
  struct Best {
    double step_ms = 0.0;
    long index = -1;
    ConfigCost cost;
  };
  auto scan = [&](size_t lo, size_t hi, Best& best) {
    for (size_t i = lo; i < hi; ++i) {
      ConfigCost c = predicted_step_time(model, configs[i]);
      if (!c.feasible) continue;
      if (best.index < 0 || c.step_ms < best.step_ms) {
        best = Best{c.step_ms, static_cast<long>(i), std::move(c)};
      }
    }
  };

  std::vector<Best> partial(static_cast<size_t>(threads));
  if (threads == 1) {
    scan(0, configs.size(), partial[0]);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (configs.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const size_t lo = std::min(configs.size(), static_cast<size_t>(t) * chunk);
      const size_t hi = std::min(configs.size(), lo + chunk);
      pool.emplace_back([&, lo, hi, t] { scan(lo, hi, partial[static_cast<size_t>(t)]); });
    }
    for (std::thread& th : pool) th.join();
  }

  Best best;
  for (Best& b : partial) {
    if (b.index < 0) continue;
    if (best.index < 0 || b.step_ms < best.step_ms ||
        (b.step_ms == best.step_ms && b.index < best.index)) {
      best = std::move(b);
    }
  }
  if (best.index < 0) {
    throw InfeasibleError("no feasible configuration");
  }

  ScheduleConfig winner = configs[static_cast<size_t>(best.index)];
  winner.flags = ScheduleFlags{true, true, !opts.contiguous_only};
  winner.provenance.configs_evaluated = static_cast<long>(configs.size());
  winner.provenance.search_cost_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(winner), std::move(best.cost)};
}

BaselinePlan dp_schedule(const CostModel& model) {
  const int N = model.hw().num_devices;
  BaselinePlan plan;
  plan.kind = BaselineKind::dp;
  plan.per_device_batch = ceil_div(model.global_batch(), N);
  double teacher_prefix = 0.0;
  for (int i = 0; i < model.num_blocks(); ++i) {
    teacher_prefix += model.exec_time(i, Role::teacher, plan.per_device_batch);
    const double student = model.exec_time(i, Role::student, plan.per_device_batch);
    plan.phase_step_ms.push_back(teacher_prefix + student + model.dpc_time(i, i, N));
  }
  plan.step_ms = std::accumulate(plan.phase_step_ms.begin(), plan.phase_step_ms.end(), 0.0);
  return plan;
}

BaselinePlan ls_schedule(const CostModel& model) {
  const int N = model.hw().num_devices;
  const int B = model.num_blocks();
  const int batch = model.global_batch();
  BaselinePlan plan;
  plan.kind = BaselineKind::ls;
  plan.per_device_batch = batch;
  plan.device_blocks.assign(static_cast<size_t>(N), {});

  // LPT: heaviest block first, ties to the lower block id; place on the
  // least-loaded device, ties to the lower device id.
  std::vector<int> order(static_cast<size_t>(B));
  std::iota(order.begin(), order.end(), 0);
  auto weight = [&](int i) {
    return model.exec_time(i, Role::teacher, batch) + model.exec_time(i, Role::student, batch);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return weight(a) > weight(b); });
  std::vector<double> load(static_cast<size_t>(N), 0.0);
  for (int i : order) {
    const size_t dev = static_cast<size_t>(
        std::min_element(load.begin(), load.end()) - load.begin());
    load[dev] += weight(i);
    plan.device_blocks[dev].push_back(i);
  }
  for (auto& blocks : plan.device_blocks) std::sort(blocks.begin(), blocks.end());

  plan.device_step_ms.assign(static_cast<size_t>(N), 0.0);
  for (int d = 0; d < N; ++d) {
    const auto& assigned = plan.device_blocks[static_cast<size_t>(d)];
    if (assigned.empty()) continue;
    double t = 0.0;
    for (int k = 0; k <= assigned.back(); ++k) {
      t += model.exec_time(k, Role::teacher, batch);
    }
    for (int i : assigned) {
      t += model.exec_time(i, Role::student, batch);
    }
    plan.device_step_ms[static_cast<size_t>(d)] = t;
  }
  plan.step_ms = *std::max_element(plan.device_step_ms.begin(), plan.device_step_ms.end());
  return plan;
}

ScheduleConfig ir_schedule(const CostModel& model) {
  const int N = model.hw().num_devices;
  ScheduleConfig cfg;
  PartitionSpec p;
  p.block_lo = 0;
  p.block_hi = model.num_blocks() - 1;
  p.devices.resize(static_cast<size_t>(N));
  std::iota(p.devices.begin(), p.devices.end(), 0);
  p.per_device_batch = ceil_div(model.global_batch(), N);
  cfg.partitions.push_back(std::move(p));
  cfg.flags = ScheduleFlags{true, true, true};
  return cfg;
}

double profile_drift(const Bpdg& reference, const Bpdg& observed) {
  if (reference.num_blocks() != observed.num_blocks()) {
    throw ValidationError("profile structure mismatch: different block counts");
  }
  double drift = 0.0;
  for (int i = 0; i < reference.num_blocks(); ++i) {
    const BlockProfile& a = reference.blocks[static_cast<size_t>(i)];
    const BlockProfile& b = observed.blocks[static_cast<size_t>(i)];
    for (auto [ref_map, obs_map] : {std::pair{&a.teacher_ms, &b.teacher_ms},
                                    std::pair{&a.student_ms, &b.student_ms}}) {
      if (ref_map->size() != obs_map->size()) {
        throw ValidationError("profile structure mismatch: different batch keys in block " +
                              std::to_string(i));
      }
      auto it = obs_map->begin();
      for (const auto& [batch, ms] : *ref_map) {
        if (it->first != batch) {
          throw ValidationError("profile structure mismatch: different batch keys in block " +
                                std::to_string(i));
        }
        drift = std::max(drift, std::abs(it->second - ms) / ms);
        ++it;
      }
    }
  }
  return drift;
}

std::optional<ScheduleConfig> reconfigure(const CostModel& model, const ScheduleConfig& current,
                                          const ProfileDoc& observed, double threshold) {
  if (threshold < 0.0) {
    throw ValidationError("threshold must be >= 0");
  }
  validate_schedule(model, current);
  const double drift = profile_drift(model.bpdg(), observed.bpdg);
  if (drift <= threshold) {
    return std::nullopt;
  }
  CostModel updated(observed, model.act_mem_multiplier());
  return best_schedule(updated).first;
}

std::string save_schedule(const ScheduleConfig& cfg, const ConfigCost& cost) {
  json j;
  j["flags"] = {{"tr", cfg.flags.tr}, {"dpu", cfg.flags.dpu}, {"ahd", cfg.flags.ahd}};
  json parts = json::array();
  for (const PartitionSpec& p : cfg.partitions) {
    parts.push_back({{"blocks", {p.block_lo, p.block_hi}},
                     {"devices", p.devices},
                     {"per_device_batch", p.per_device_batch}});
  }
  j["partitions"] = std::move(parts);
  j["predicted"] = {{"partition_ms", cost.partition_ms}, {"step_ms", cost.step_ms}};
  return j.dump(2) + "\n";
}

std::pair<ScheduleConfig, ConfigCost> load_schedule(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("schedule parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("flags") || !j.contains("partitions") ||
      !j.contains("predicted")) {
    throw ValidationError("schedule document needs flags, partitions and predicted");
  }
  ScheduleConfig cfg;
  cfg.flags.tr = j.at("flags").at("tr").get<bool>();
  cfg.flags.dpu = j.at("flags").at("dpu").get<bool>();
  cfg.flags.ahd = j.at("flags").at("ahd").get<bool>();
  for (const json& jp : j.at("partitions")) {
    PartitionSpec p;
    const auto& range = jp.at("blocks");
    if (!range.is_array() || range.size() != 2) {
      throw ValidationError("partition blocks must be [lo, hi]");
    }
    p.block_lo = range.at(0).get<int>();
    p.block_hi = range.at(1).get<int>();
    p.devices = jp.at("devices").get<std::vector<int>>();
    p.per_device_batch = jp.at("per_device_batch").get<int>();
    cfg.partitions.push_back(std::move(p));
  }
  ConfigCost cost;
  cost.partition_ms = j.at("predicted").at("partition_ms").get<std::vector<double>>();
  cost.step_ms = j.at("predicted").at("step_ms").get<double>();
  if (cfg.partitions.empty() || cost.partition_ms.size() != cfg.partitions.size()) {
    throw ValidationError("schedule document partition/prediction size mismatch");
  }
  return {std::move(cfg), std::move(cost)};
}

std::pair<ScheduleConfig, ConfigCost> load_schedule_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open schedule file: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_schedule(ss.str());
}

}  // namespace pbd
