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

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace pbd {

using nlohmann::json;

const BlockProfile& Bpdg::block(int id) const {
  if (id < 0 || id >= num_blocks()) {
    throw ValidationError("unknown block id " + std::to_string(id));
  }
  return blocks[static_cast<size_t>(id)];
}

namespace {

void check_time_map(const std::map<int, double>& m, const char* role, int id) {
  const std::string where = std::string(role) + " of block " + std::to_string(id);
  if (m.empty()) {
    throw ValidationError("empty time map in " + where);
  }
  double prev = 0.0;
  for (const auto& [batch, ms] : m) {
    if (batch < 1) {
      throw ValidationError("batch key < 1 in " + where);
    }
    if (ms <= 0.0) {
      throw ValidationError("non-positive time in " + where);
    }
    if (ms < prev) {
      throw ValidationError("times non-monotone in batch in " + where);
    }
    prev = ms;
  }
}

void check_block(const BlockProfile& b) {
  check_time_map(b.teacher_ms, "teacher_ms", b.block_id);
  check_time_map(b.student_ms, "student_ms", b.block_id);
  auto keys = [](const std::map<int, double>& m) {
    std::vector<int> k;
    for (const auto& [batch, ms] : m) k.push_back(batch);
    return k;
  };
  if (keys(b.teacher_ms) != keys(b.student_ms)) {
    throw ValidationError("missing batch key: teacher_ms and student_ms of block " +
                          std::to_string(b.block_id) + " have different batch keys");
  }
  if (b.act_bytes_per_sample < 0.0 || b.param_bytes < 0.0 || b.teacher_param_bytes < 0.0) {
    throw ValidationError("negative byte size in block " + std::to_string(b.block_id));
  }
  if (b.dpc_ms_override && *b.dpc_ms_override < 0.0) {
    throw ValidationError("negative dpc_ms_override in block " + std::to_string(b.block_id));
  }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError(std::string("unknown key \"") + item.key() + "\" in " + where);
    }
  }
}

std::map<int, double> parse_time_map(const json& j, const char* where) {
  if (!j.is_object()) {
    throw ValidationError(std::string(where) + " must be an object of batch -> ms");
  }
  std::map<int, double> out;
  for (const auto& item : j.items()) {
    int batch = 0;
    try {
      size_t pos = 0;
      batch = std::stoi(item.key(), &pos);
      if (pos != item.key().size()) throw std::invalid_argument(item.key());
    } catch (const std::exception&) {
      throw ValidationError(std::string("non-integer batch key \"") + item.key() + "\" in " + where);
    }
    if (!item.value().is_number()) {
      throw ValidationError(std::string("non-numeric time in ") + where);
    }
    out[batch] = item.value().get<double>();
  }
  return out;
}

double get_number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) {
    throw ValidationError(std::string("missing key \"") + key + "\" in " + where);
  }
  if (!obj.at(key).is_number()) {
    throw ValidationError(std::string("key \"") + key + "\" in " + where + " must be a number");
  }
  return obj.at(key).get<double>();
}

int get_int(const json& obj, const char* key, const char* where) {
  double v = get_number(obj, key, where);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ValidationError(std::string("key \"") + key + "\" in " + where + " must be an integer");
  }
  return i;
}

json time_map_to_json(const std::map<int, double>& m) {
  json j = json::object();
  for (const auto& [batch, ms] : m) j[std::to_string(batch)] = ms;
  return j;
}

}  // namespace

Bpdg make_bpdg(std::vector<BlockProfile> blocks) {
  if (blocks.empty()) {
    throw ValidationError("profile has no blocks");
  }
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].block_id != static_cast<int>(i)) {
      throw ValidationError("non-contiguous block ids (expected " + std::to_string(i) +
                            ", got " + std::to_string(blocks[i].block_id) + ")");
    }
    check_block(blocks[i]);
  }
  Bpdg g;
  g.blocks = std::move(blocks);
  for (int i = 0; i + 1 < g.num_blocks(); ++i) {
    g.edges.push_back({i, i + 1, g.blocks[static_cast<size_t>(i)].act_bytes_per_sample});
  }
  return g;
}

void validate_hardware(const HardwareSpec& hw) {
  if (hw.num_devices < 1) throw ValidationError("num_devices must be >= 1");
  if (hw.link_bytes_per_ms <= 0.0) throw ValidationError("link_bytes_per_ms must be positive");
  if (hw.allreduce_bytes_per_ms <= 0.0) throw ValidationError("allreduce_bytes_per_ms must be positive");
  if (hw.mem_bytes_per_device <= 0.0) throw ValidationError("mem_bytes_per_device must be positive");
  if (hw.data_load_ms_per_batch < 0.0) throw ValidationError("data_load_ms_per_batch must be >= 0");
  if (!(hw.min_utilization_floor > 0.0 && hw.min_utilization_floor <= 1.0)) {
    throw ValidationError("min_utilization_floor must be in (0,1]");
  }
}

ProfileDoc load_profile(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("profile parse error: ") + e.what());
  }
  if (!j.is_object()) {
    throw ValidationError("profile document must be a JSON object");
  }
  reject_unknown_keys(j, {"blocks", "hardware", "global_batch"}, "profile document");
  if (!j.contains("blocks") || !j.at("blocks").is_array()) {
    throw ValidationError("profile document needs a \"blocks\" array");
  }
  if (!j.contains("hardware") || !j.at("hardware").is_object()) {
    throw ValidationError("profile document needs a \"hardware\" object");
  }

  std::vector<BlockProfile> blocks;
  for (const json& jb : j.at("blocks")) {
    if (!jb.is_object()) throw ValidationError("block entry must be an object");
    reject_unknown_keys(jb,
                        {"id", "teacher_ms", "student_ms", "act_bytes_per_sample", "param_bytes",
                         "teacher_param_bytes", "dpc_ms_override"},
                        "block entry");
    BlockProfile b;
    b.block_id = get_int(jb, "id", "block entry");
    if (!jb.contains("teacher_ms") || !jb.contains("student_ms")) {
      throw ValidationError("block entry needs teacher_ms and student_ms");
    }
    b.teacher_ms = parse_time_map(jb.at("teacher_ms"), "teacher_ms");
    b.student_ms = parse_time_map(jb.at("student_ms"), "student_ms");
    b.act_bytes_per_sample = get_number(jb, "act_bytes_per_sample", "block entry");
    b.param_bytes = get_number(jb, "param_bytes", "block entry");
    b.teacher_param_bytes = get_number(jb, "teacher_param_bytes", "block entry");
    if (jb.contains("dpc_ms_override")) {
      if (!jb.at("dpc_ms_override").is_number()) {
        throw ValidationError("dpc_ms_override must be a number");
      }
      b.dpc_ms_override = jb.at("dpc_ms_override").get<double>();
    }
    blocks.push_back(std::move(b));
  }

  const json& jh = j.at("hardware");
  reject_unknown_keys(jh,
                      {"num_devices", "link_bytes_per_ms", "allreduce_bytes_per_ms",
                       "mem_bytes_per_device", "data_load_ms_per_batch", "min_utilization_floor"},
                      "hardware");
  HardwareSpec hw;
  hw.num_devices = get_int(jh, "num_devices", "hardware");
  hw.link_bytes_per_ms = get_number(jh, "link_bytes_per_ms", "hardware");
  hw.allreduce_bytes_per_ms = get_number(jh, "allreduce_bytes_per_ms", "hardware");
  hw.mem_bytes_per_device = get_number(jh, "mem_bytes_per_device", "hardware");
  hw.data_load_ms_per_batch = get_number(jh, "data_load_ms_per_batch", "hardware");
  hw.min_utilization_floor = get_number(jh, "min_utilization_floor", "hardware");

  ProfileDoc doc;
  doc.bpdg = make_bpdg(std::move(blocks));
  doc.hardware = hw;
  validate_hardware(doc.hardware);
  doc.global_batch = get_int(j, "global_batch", "profile document");
  if (doc.global_batch < 1) {
    throw ValidationError("global_batch must be >= 1");
  }
  if (doc.global_batch < doc.hardware.num_devices) {
    throw ValidationError("global_batch must be >= num_devices");
  }
  return doc;
}

ProfileDoc load_profile_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open profile file: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_profile(ss.str());
}

std::string save_profile(const ProfileDoc& doc) {
  json j;
  json blocks = json::array();
  for (const BlockProfile& b : doc.bpdg.blocks) {
    json jb;
    jb["id"] = b.block_id;
    jb["teacher_ms"] = time_map_to_json(b.teacher_ms);
    jb["student_ms"] = time_map_to_json(b.student_ms);
    jb["act_bytes_per_sample"] = b.act_bytes_per_sample;
    jb["param_bytes"] = b.param_bytes;
    jb["teacher_param_bytes"] = b.teacher_param_bytes;
    if (b.dpc_ms_override) jb["dpc_ms_override"] = *b.dpc_ms_override;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  j["hardware"] = {
      {"num_devices", doc.hardware.num_devices},
      {"link_bytes_per_ms", doc.hardware.link_bytes_per_ms},
      {"allreduce_bytes_per_ms", doc.hardware.allreduce_bytes_per_ms},
      {"mem_bytes_per_device", doc.hardware.mem_bytes_per_device},
      {"data_load_ms_per_batch", doc.hardware.data_load_ms_per_batch},
      {"min_utilization_floor", doc.hardware.min_utilization_floor},
  };
  j["global_batch"] = doc.global_batch;
  return j.dump(2) + "\n";
}

SynthShape synth_shape_from_string(const std::string& s) {
  if (s == "uniform") return SynthShape::uniform;
  if (s == "front-heavy") return SynthShape::front_heavy;
  if (s == "custom") return SynthShape::custom;
  throw ValidationError("unknown profile shape \"" + s + "\"");
}

ProfileDoc synth_profile(const SynthSpec& spec) {
  if (spec.blocks < 1) {
    throw ValidationError("blocks must be >= 1");
  }
  if (spec.scale_ms <= 0.0) throw ValidationError("scale_ms must be positive");
  if (spec.reference_batch < 4) throw ValidationError("reference_batch must be >= 4");
  if (spec.jitter < 0.0 || spec.jitter >= 1.0) throw ValidationError("jitter must be in [0,1)");
  if (spec.curvature < 0.0 || spec.curvature > 1.0) throw ValidationError("curvature must be in [0,1]");

  std::vector<double> weights(static_cast<size_t>(spec.blocks), 1.0);
  switch (spec.shape) {
    case SynthShape::uniform:
      break;
    case SynthShape::front_heavy:
      if (spec.front_weight <= 0.0) throw ValidationError("front weight must be positive");
      weights[0] = spec.front_weight;
      break;
    case SynthShape::custom:
      if (static_cast<int>(spec.custom_weights.size()) != spec.blocks) {
        throw ValidationError("custom shape needs exactly one weight per block");
      }
      for (double w : spec.custom_weights) {
        if (w <= 0.0) throw ValidationError("custom weights must be positive");
      }
      weights = spec.custom_weights;
      break;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int ref = spec.reference_batch;
  const std::vector<int> batches = {ref / 4, ref / 2, ref};

  auto curve = [&](int b) {
    return spec.curvature + (1.0 - spec.curvature) * static_cast<double>(b) / ref;
  };
  auto sample = [&](double base_ms) {
    std::map<int, double> m;
    double prev = 0.0;
    for (int b : batches) {
      double t = base_ms * curve(b);
      if (spec.jitter > 0.0) t *= 1.0 + spec.jitter * unit(rng);
      t = std::max(t, prev);  // keep monotone under jitter
      m[b] = t;
      prev = t;
    }
    return m;
  };

  std::vector<BlockProfile> blocks;
  for (int i = 0; i < spec.blocks; ++i) {
    const double w = weights[static_cast<size_t>(i)];
    BlockProfile b;
    b.block_id = i;
    b.teacher_ms = sample(spec.scale_ms * w);
    b.student_ms = sample(spec.scale_ms * w * spec.student_teacher_ratio);
    b.act_bytes_per_sample = spec.act_bytes_per_sample;
    b.param_bytes = spec.param_bytes * w;
    b.teacher_param_bytes = spec.teacher_param_bytes * w;
    blocks.push_back(std::move(b));
  }

  ProfileDoc doc;
  doc.bpdg = make_bpdg(std::move(blocks));
  doc.hardware = spec.hardware;
  validate_hardware(doc.hardware);
  doc.global_batch = spec.global_batch;
  if (doc.global_batch < doc.hardware.num_devices) {
    throw ValidationError("global_batch must be >= num_devices");
  }
  return doc;
}

}  // namespace pbd
