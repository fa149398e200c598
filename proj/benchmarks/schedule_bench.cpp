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
#include <benchmark/benchmark.h>

#include "pbd/report.hpp"

namespace {

pbd::ProfileDoc bench_doc(int blocks, int devices) {
  pbd::SynthSpec spec;
  spec.shape = pbd::SynthShape::front_heavy;
  spec.blocks = blocks;
  spec.curvature = 0.3;
  spec.jitter = 0.05;
  spec.seed = 1;
  spec.hardware.num_devices = devices;
  return pbd::synth_profile(spec);
}

void BM_EnumerateConfigs(benchmark::State& state) {
  const int blocks = static_cast<int>(state.range(0));
  const int devices = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pbd::enumerate_configs(blocks, devices, 256));
  }
}
BENCHMARK(BM_EnumerateConfigs)->Args({6, 4})->Args({10, 8})->Args({12, 8});

void BM_BestSchedule(benchmark::State& state) {
  const pbd::CostModel model(bench_doc(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1))));
  pbd::SearchOptions opts;
  opts.threads = static_cast<int>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pbd::best_schedule(model, opts));
  }
}
BENCHMARK(BM_BestSchedule)
    ->Args({10, 8, 1})
    ->Args({10, 8, 4})
    ->Args({12, 8, 1})
    ->Args({12, 8, 4});

void BM_Simulate(benchmark::State& state) {
  const pbd::CostModel model(bench_doc(10, 8));
  const pbd::ScheduleConfig cfg = pbd::best_schedule(model).first;
  pbd::SimConfig sim;
  sim.steps_per_epoch = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pbd::simulate(model, cfg, sim));
  }
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000);

void BM_GanttSvg(benchmark::State& state) {
  const pbd::CostModel model(bench_doc(10, 8));
  const pbd::ScheduleConfig cfg = pbd::best_schedule(model).first;
  pbd::SimConfig sim;
  sim.steps_per_epoch = 50;
  const pbd::SimReport report = pbd::simulate(model, cfg, sim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pbd::gantt_svg(report));
  }
}
BENCHMARK(BM_GanttSvg);

}  // namespace

BENCHMARK_MAIN();
