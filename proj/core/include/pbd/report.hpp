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

#include <map>
#include <string>
#include <vector>

#include "pbd/simulate.hpp"

namespace pbd {

// A set of labelled simulation reports measured against one baseline.
struct Comparison {
  std::vector<std::pair<std::string, SimReport>> entries;
  std::string baseline_label;

  Comparison(std::vector<std::pair<std::string, SimReport>> e, std::string baseline);
  const SimReport& baseline() const;
};

struct GanttOptions {
  double plot_width_px = 960.0;
  double lane_height_px = 28.0;
  bool legend = true;
  bool show_overlapped_sends = true;
  std::string title;
};

// One lane per device, one category-colored rectangle per event; byte-stable
// for equal inputs. Overlapped sends are drawn as thin strips under the lane.
std::string gantt_svg(const SimReport& report, const GanttOptions& options = {});

// Simple rectangular table with text / CSV / JSON renderings.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_text() const;
  std::string to_csv() const;
  std::string to_json() const;
};

// Per-label per-category time totals, normalized by device count.
std::map<std::string, std::map<std::string, double>> breakdown_totals(const Comparison& c);

Table breakdown_table(const Comparison& c);

// makespan(baseline) / makespan(label) for every entry.
std::map<std::string, double> speedup(const Comparison& c);

Table speedup_table(const Comparison& c);

}  // namespace pbd
