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
#include "pbd/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pbd {

Comparison::Comparison(std::vector<std::pair<std::string, SimReport>> e, std::string baseline)
    : entries(std::move(e)), baseline_label(std::move(baseline)) {
  std::set<std::string> labels;
  for (const auto& [label, report] : entries) {
    if (!labels.insert(label).second) {
      throw ValidationError("duplicate comparison label \"" + label + "\"");
    }
  }
  if (!labels.contains(baseline_label)) {
    throw ValidationError("baseline label \"" + baseline_label + "\" not present");
  }
}

const SimReport& Comparison::baseline() const {
  for (const auto& [label, report] : entries) {
    if (label == baseline_label) return report;
  }
  throw ValidationError("baseline label \"" + baseline_label + "\" not present");
}

namespace {

// Fixed 12-color palette (ColorBrewer Set3); the last three are spare.
const char* category_color(EventCategory c) {
  switch (c) {
    case EventCategory::data_load: return "#8dd3c7";
    case EventCategory::teacher_fwd: return "#80b1d3";
    case EventCategory::student_fwd_bwd: return "#fb8072";
    case EventCategory::send: return "#fdb462";
    case EventCategory::recv_wait: return "#ffffb3";
    case EventCategory::grad_share: return "#bc80bd";
    case EventCategory::weight_update: return "#b3de69";
    case EventCategory::barrier_wait: return "#fccde5";
    case EventCategory::idle: return "#d9d9d9";
  }
  return "#bebada";  // spares: #bebada #ccebc5 #ffed6f
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void rect(std::ostringstream& out, double x, double y, double w, double h, const char* fill,
          const std::string& title) {
  out << "  <rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"#555555\" "
      << "stroke-width=\"0.3\">";
  if (!title.empty()) out << "<title>" << title << "</title>";
  out << "</rect>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s,
          const char* anchor = "start") {
  out << "  <text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"11\" "
      << "font-family=\"monospace\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
}

}  // namespace

std::string gantt_svg(const SimReport& report, const GanttOptions& options) {
  if (report.timelines.empty() || report.makespan_ms <= 0.0) {
    throw ValidationError("cannot render an empty report");
  }
  const double left = 64.0;
  const double top = options.title.empty() ? 24.0 : 44.0;
  const double lane_h = options.lane_height_px;
  const double width = options.plot_width_px;
  const int n = report.num_devices;
  const double axis_h = 24.0;
  const double legend_h = options.legend ? 20.0 : 0.0;
  const double total_w = left + width + 16.0;
  const double total_h = top + n * lane_h + axis_h + legend_h + 8.0;
  const double px_per_ms = width / report.makespan_ms;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(total_w)
      << "\" height=\"" << fmt(total_h) << "\" viewBox=\"0 0 " << fmt(total_w) << " "
      << fmt(total_h) << "\">\n";
  if (!options.title.empty()) {
    text(out, left, 18.0, options.title);
  }

  for (int d = 0; d < n; ++d) {
    const double y = top + d * lane_h;
    rect(out, left, y, width, lane_h, d % 2 == 0 ? "#f4f4f4" : "#ececec", "");
    text(out, 8.0, y + lane_h * 0.65, "dev " + std::to_string(d));
  }

  for (int d = 0; d < n; ++d) {
    const double y = top + d * lane_h;
    for (const Event& ev : report.timelines[static_cast<size_t>(d)]) {
      if (ev.duration() <= 0.0) continue;
      if (ev.category == EventCategory::idle) continue;  // lane background shows through
      if (ev.overlapped && !options.show_overlapped_sends) continue;
      const double x = left + ev.start_ms * px_per_ms;
      const double w = ev.duration() * px_per_ms;
      std::string title = std::string(to_string(ev.category));
      if (ev.block) title += " block " + std::to_string(*ev.block);
      title += " [" + fmt_ms(ev.start_ms) + ", " + fmt_ms(ev.end_ms) + "] ms";
      if (ev.overlapped) {
        rect(out, x, y + lane_h * 0.72, w, lane_h * 0.24, category_color(ev.category), title);
      } else {
        rect(out, x, y + 1.0, w, lane_h - 2.0, category_color(ev.category), title);
      }
    }
  }

  // time axis
  const double axis_y = top + n * lane_h;
  out << "  <line x1=\"" << fmt(left) << "\" y1=\"" << fmt(axis_y) << "\" x2=\""
      << fmt(left + width) << "\" y2=\"" << fmt(axis_y)
      << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double t = report.makespan_ms * tick / 5.0;
    const double x = left + t * px_per_ms;
    out << "  <line x1=\"" << fmt(x) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(axis_y + 4.0) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    text(out, x, axis_y + 15.0, fmt_ms(t), "middle");
  }

  if (options.legend) {
    double x = left;
    const double y = axis_y + axis_h;
    for (EventCategory c : kAllCategories) {
      rect(out, x, y, 10.0, 10.0, category_color(c), "");
      const std::string name = to_string(c);
      text(out, x + 13.0, y + 9.0, name);
      x += 13.0 + 7.0 * name.size() + 16.0;
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string Table::to_text() const {
  std::vector<size_t> width(columns.size(), 0);
  for (size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      out << (c == 0 ? "" : "  ");
      out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    out << "\n";
  };
  line(columns);
  size_t total = 0;
  for (size_t c = 0; c < columns.size(); ++c) total += width[c] + (c == 0 ? 0 : 2);
  out << std::string(total, '-') << "\n";
  for (const auto& row : rows) line(row);
  return out.str();
}

std::string Table::to_csv() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c) out << ",";
      out << cells[c];
    }
    out << "\n";
  };
  line(columns);
  for (const auto& row : rows) line(row);
  return out.str();
}

std::string Table::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json obj;
    for (size_t c = 0; c < columns.size() && c < row.size(); ++c) {
      obj[columns[c]] = row[c];
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::map<std::string, std::map<std::string, double>> breakdown_totals(const Comparison& c) {
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [label, report] : c.entries) {
    auto& per_category = out[label];
    for (EventCategory cat : kAllCategories) {
      per_category[to_string(cat)] =
          report.category_totals_ms.at(to_string(cat)) / report.num_devices;
    }
  }
  return out;
}

Table breakdown_table(const Comparison& c) {
  const auto totals = breakdown_totals(c);
  Table t;
  t.columns.push_back("label");
  for (EventCategory cat : kAllCategories) t.columns.push_back(to_string(cat));
  for (const auto& [label, report] : c.entries) {
    std::vector<std::string> row{label};
    for (EventCategory cat : kAllCategories) {
      row.push_back(fmt_ms(totals.at(label).at(to_string(cat))));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::map<std::string, double> speedup(const Comparison& c) {
  const double base = c.baseline().makespan_ms;
  std::map<std::string, double> out;
  for (const auto& [label, report] : c.entries) {
    if (report.makespan_ms <= 0.0) {
      throw ValidationError("zero makespan for label \"" + label + "\"");
    }
    out[label] = base / report.makespan_ms;
  }
  return out;
}

Table speedup_table(const Comparison& c) {
  const auto ratios = speedup(c);
  Table t;
  t.columns = {"label", "makespan_ms", "steady_step_ms", "bubble_ratio", "speedup"};
  for (const auto& [label, report] : c.entries) {
    t.rows.push_back({label, fmt_ms(report.makespan_ms), fmt_ms(report.steady_state_step_ms),
                      fmt_ms(report.bubble_ratio), fmt_ms(ratios.at(label)) + "x"});
  }
  return t;
}

}  // namespace pbd
