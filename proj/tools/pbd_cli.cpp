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
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbd/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitIo = 3;

void write_output(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw pbd::IoError("cannot open output file: " + out_path);
  }
  out << content;
  if (!out) {
    throw pbd::IoError("failed writing output file: " + out_path);
  }
}

std::string read_stdin() {
  std::stringstream ss;
  ss << std::cin.rdbuf();
  return ss.str();
}

bool parse_on_off(const std::string& v, const char* flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw pbd::ValidationError(std::string(flag) + " must be on or off");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

pbd::ProfileDoc load_profile_arg(const std::string& path) {
  return path == "-" ? pbd::load_profile(read_stdin()) : pbd::load_profile_file(path);
}

struct SimFlags {
  int steps = 32;
  int epochs = 1;
  std::string dpu;  // empty = keep the schedule's flag
  std::string overlap_send = "on";
  std::string overlap_load = "on";
  double epoch_sync_ms = 0.0;
  double weight_update_ms = 0.0;

  void add_to(CLI::App* cmd, bool with_dpu) {
    cmd->add_option("--steps", steps, "Steps per epoch");
    cmd->add_option("--epochs", epochs, "Number of epochs");
    if (with_dpu) {
      cmd->add_option("--dpu", dpu, "Decoupled parameter update: on|off");
    }
    cmd->add_option("--overlap-send", overlap_send, "Overlap activation sends: on|off");
    cmd->add_option("--overlap-load", overlap_load, "Prefetch data loads: on|off");
    cmd->add_option("--epoch-sync-ms", epoch_sync_ms, "Synchronization cost per epoch boundary");
    cmd->add_option("--weight-update-ms", weight_update_ms, "Weight update duration");
  }

  pbd::SimConfig to_config(bool dpu_default) const {
    pbd::SimConfig sim;
    sim.steps_per_epoch = steps;
    sim.epochs = epochs;
    sim.dpu = dpu.empty() ? dpu_default : parse_on_off(dpu, "--dpu");
    sim.overlap_send = parse_on_off(overlap_send, "--overlap-send");
    sim.overlap_load = parse_on_off(overlap_load, "--overlap-load");
    sim.epoch_sync_ms = epoch_sync_ms;
    sim.weight_update_ms = weight_update_ms;
    return sim;
  }
};

int run_schedule(const std::string& profile_path, bool no_ahd, int devices, int threads,
                 const std::string& out_path, const std::string& format) {
  pbd::ProfileDoc doc = load_profile_arg(profile_path);
  if (devices > 0) {
    doc.hardware.num_devices = devices;
  }
  pbd::CostModel model(doc);
  pbd::SearchOptions opts;
  opts.contiguous_only = no_ahd;
  opts.threads = threads;
  auto [cfg, cost] = pbd::best_schedule(model, opts);

  const std::string document = pbd::save_schedule(cfg, cost);
  std::ostringstream summary;
  summary << "configs evaluated: " << cfg.provenance.configs_evaluated << "\n";
  summary << "predicted step time: ";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", cost.step_ms);
  summary << buf << " ms\n";
  summary << "partitions: " << cfg.num_partitions() << "\n";
  std::fprintf(stderr, "search took %.3f ms\n", cfg.provenance.search_cost_ms);

  if (!out_path.empty()) {
    write_output(document, out_path);
    std::cout << summary.str();
  } else if (format == "json") {
    std::cout << document;
    std::cerr << summary.str();
  } else {
    std::cout << summary.str() << document;
  }
  return kExitOk;
}

int run_simulate(const std::string& schedule_path, const std::string& profile_path,
                 const SimFlags& flags, const std::string& gantt_path,
                 const std::string& out_path, const std::string& format) {
  const auto [cfg, predicted] =
      schedule_path == "-" ? pbd::load_schedule(read_stdin())
                           : pbd::load_schedule_file(schedule_path);
  pbd::ProfileDoc doc = load_profile_arg(profile_path);
  pbd::CostModel model(doc);
  const pbd::SimConfig sim = flags.to_config(cfg.flags.dpu);
  const pbd::SimReport report = pbd::simulate(model, cfg, sim);

  if (!gantt_path.empty()) {
    write_output(pbd::gantt_svg(report), gantt_path);
  }
  if (format == "json" || !out_path.empty()) {
    write_output(pbd::save_report(report), out_path);
  } else {
    std::cout << "makespan: " << report.makespan_ms << " ms\n";
    std::cout << "steady-state step: " << report.steady_state_step_ms << " ms\n";
    std::cout << "predicted step: " << predicted.step_ms << " ms\n";
    std::cout << "bubble ratio: " << report.bubble_ratio << "\n";
    std::cout << "per-device totals (ms):\n";
    for (const auto& [category, total] : report.category_totals_ms) {
      std::cout << "  " << category << ": " << total / report.num_devices << "\n";
    }
  }
  return kExitOk;
}

int run_compare(const std::string& profile_path, const std::string& against,
                const std::string& ablation, const SimFlags& flags, const std::string& out_path,
                const std::string& format) {
  pbd::ProfileDoc doc = load_profile_arg(profile_path);
  pbd::CostModel model(doc);

  const std::vector<std::string> baselines = split_csv(against);
  const std::vector<std::string> ablations = split_csv(ablation);
  if (baselines.empty()) {
    throw pbd::ValidationError("--against needs at least one of dp,ls,ir");
  }
  // validate the full selection before simulating anything
  std::set<std::string> seen;
  for (const auto* group : {&baselines, &ablations}) {
    for (const std::string& label : *group) {
      if (label != "dp" && label != "ls" && label != "ir" && label != "tr" &&
          label != "tr+dpu" && label != "tr+dpu+ahd") {
        throw pbd::ValidationError("unknown comparison label \"" + label + "\"");
      }
      if (!seen.insert(label).second) {
        throw pbd::ValidationError("duplicate comparison label \"" + label + "\"");
      }
    }
  }

  // TR and TR+DPU share the best contiguous schedule; TR+DPU+AHD adds the
  // batch-split dimension back in.
  std::optional<pbd::ScheduleConfig> contiguous;
  auto contiguous_schedule = [&]() -> const pbd::ScheduleConfig& {
    if (!contiguous) contiguous = pbd::best_schedule(model, {.contiguous_only = true}).first;
    return *contiguous;
  };

  std::vector<std::pair<std::string, pbd::SimReport>> entries;
  auto simulate_label = [&](const std::string& label) {
    if (label == "dp") {
      return pbd::simulate_baseline(model, pbd::dp_schedule(model), flags.to_config(true));
    }
    if (label == "ls") {
      return pbd::simulate_baseline(model, pbd::ls_schedule(model), flags.to_config(true));
    }
    if (label == "ir") {
      return pbd::simulate(model, pbd::ir_schedule(model), flags.to_config(true));
    }
    if (label == "tr") {
      pbd::SimConfig sim = flags.to_config(false);
      sim.dpu = false;
      return pbd::simulate(model, contiguous_schedule(), sim);
    }
    if (label == "tr+dpu") {
      pbd::SimConfig sim = flags.to_config(true);
      sim.dpu = true;
      return pbd::simulate(model, contiguous_schedule(), sim);
    }
    if (label == "tr+dpu+ahd") {
      pbd::SimConfig sim = flags.to_config(true);
      sim.dpu = true;
      return pbd::simulate(model, pbd::best_schedule(model).first, sim);
    }
    throw pbd::ValidationError("unknown comparison label \"" + label + "\"");
  };

  for (const std::string& label : baselines) entries.emplace_back(label, simulate_label(label));
  for (const std::string& label : ablations) entries.emplace_back(label, simulate_label(label));
  pbd::Comparison comparison(std::move(entries), baselines.front());

  std::string content;
  if (format == "json") {
    nlohmann::json j;
    j["baseline"] = comparison.baseline_label;
    j["speedup"] = pbd::speedup(comparison);
    j["breakdown"] = nlohmann::json::parse(pbd::breakdown_table(comparison).to_json());
    content = j.dump(2) + "\n";
  } else if (format == "csv") {
    content = pbd::speedup_table(comparison).to_csv() + "\n" +
              pbd::breakdown_table(comparison).to_csv();
  } else {
    content = "== speedup vs " + comparison.baseline_label + " ==\n" +
              pbd::speedup_table(comparison).to_text() + "\n== breakdown (per-device ms) ==\n" +
              pbd::breakdown_table(comparison).to_text();
  }
  write_output(content, out_path);
  return kExitOk;
}

int run_profile_gen(const pbd::SynthSpec& spec, const std::string& out_path) {
  write_output(pbd::save_profile(pbd::synth_profile(spec)), out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduler and discrete-event simulator for pipelined parallel blockwise "
               "distillation"};
  app.require_subcommand(1);

  // schedule
  auto* cmd_schedule = app.add_subcommand("schedule", "Search for the best hybrid schedule");
  std::string sched_profile;
  bool no_ahd = false;
  int devices = 0;
  int threads = 0;
  std::string sched_out, sched_format = "text";
  cmd_schedule->add_option("profile", sched_profile, "Profile document (or - for stdin)")
      ->required();
  cmd_schedule->add_flag("--no-ahd", no_ahd,
                         "Restrict to contiguous splits with one device per partition");
  cmd_schedule->add_option("--devices", devices, "Override the profile's device count");
  cmd_schedule->add_option("--threads", threads, "Search threads (default: PBD_THREADS or all)");
  cmd_schedule->add_option("--out", sched_out, "Write the schedule document here");
  cmd_schedule->add_option("--format", sched_format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));

  // simulate
  auto* cmd_simulate = app.add_subcommand("simulate", "Simulate a schedule against a profile");
  std::string sim_schedule, sim_profile, gantt_path, sim_out, sim_format = "text";
  SimFlags sim_flags;
  cmd_simulate->add_option("schedule", sim_schedule, "Schedule document (or - for stdin)")
      ->required();
  cmd_simulate->add_option("profile", sim_profile, "Profile document")->required();
  sim_flags.add_to(cmd_simulate, /*with_dpu=*/true);
  cmd_simulate->add_option("--gantt", gantt_path, "Write an SVG timeline here");
  cmd_simulate->add_option("--out", sim_out, "Write the report document here");
  cmd_simulate->add_option("--format", sim_format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));

  // compare
  auto* cmd_compare = app.add_subcommand("compare", "Compare baselines and ablations");
  std::string cmp_profile, against = "dp", ablation = "tr,tr+dpu,tr+dpu+ahd";
  std::string cmp_out, cmp_format = "text";
  SimFlags cmp_flags;
  cmd_compare->add_option("profile", cmp_profile, "Profile document (or - for stdin)")
      ->required();
  cmd_compare->add_option("--against", against, "Baselines: comma-separated dp,ls,ir");
  cmd_compare->add_option("--ablation", ablation,
                          "Ablations: comma-separated tr,tr+dpu,tr+dpu+ahd");
  cmp_flags.add_to(cmd_compare, /*with_dpu=*/false);
  cmd_compare->add_option("--out", cmp_out, "Write tables here");
  cmd_compare->add_option("--format", cmp_format, "text|csv|json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  // profile-gen
  auto* cmd_gen = app.add_subcommand("profile-gen", "Generate a synthetic profile document");
  std::string shape = "uniform", weights_csv, gen_out;
  pbd::SynthSpec spec;
  cmd_gen->add_option("--shape", shape, "uniform|front-heavy|custom");
  cmd_gen->add_option("--blocks", spec.blocks, "Number of blocks")->required();
  cmd_gen->add_option("--scale", spec.scale_ms, "Per-block time at the reference batch (ms)");
  cmd_gen->add_option("--weight", spec.front_weight, "front-heavy: block 0 weight");
  cmd_gen->add_option("--weights", weights_csv, "custom: comma-separated per-block weights");
  cmd_gen->add_option("--curve", spec.curvature,
                      "Fixed-overhead fraction; 0 = time proportional to batch");
  cmd_gen->add_option("--jitter", spec.jitter, "Relative jitter on measured times");
  cmd_gen->add_option("--seed", spec.seed, "Jitter seed");
  cmd_gen->add_option("--student-ratio", spec.student_teacher_ratio,
                      "Student time as a multiple of teacher time");
  cmd_gen->add_option("--devices", spec.hardware.num_devices, "Device count");
  cmd_gen->add_option("--global-batch", spec.global_batch, "Samples per step");
  cmd_gen->add_option("--reference-batch", spec.reference_batch, "Largest measured batch");
  cmd_gen->add_option("--load-ms", spec.hardware.data_load_ms_per_batch,
                      "Host load time for one full batch");
  cmd_gen->add_option("--mem-bytes", spec.hardware.mem_bytes_per_device, "Device memory capacity");
  cmd_gen->add_option("--out", gen_out, "Write the profile document here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (cmd_schedule->parsed()) {
      return run_schedule(sched_profile, no_ahd, devices, threads, sched_out, sched_format);
    }
    if (cmd_simulate->parsed()) {
      return run_simulate(sim_schedule, sim_profile, sim_flags, gantt_path, sim_out, sim_format);
    }
    if (cmd_compare->parsed()) {
      return run_compare(cmp_profile, against, ablation, cmp_flags, cmp_out, cmp_format);
    }
    if (cmd_gen->parsed()) {
      spec.shape = pbd::synth_shape_from_string(shape);
      if (!weights_csv.empty()) {
        for (const std::string& w : split_csv(weights_csv)) {
          spec.custom_weights.push_back(std::stod(w));
        }
      }
      return run_profile_gen(spec, gen_out);
    }
  } catch (const pbd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pbd::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const pbd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
