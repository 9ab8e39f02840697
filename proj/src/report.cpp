/* Copyright 2026 The opflow Authors. All Rights Reserved.
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

#include "opflow/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace opflow {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};

}  // namespace

std::string svg_chart(const std::string& title, const std::vector<ChartSeries>& series) {
  constexpr double kW = 480, kH = 240, kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;
  int e0 = 0, e1 = 0;
  double v0 = 0.0, v1 = 0.0;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [e, v] : s.points) {
      if (first) {
        e0 = e1 = e;
        v0 = v1 = v;
        first = false;
      }
      e0 = std::min(e0, e);
      e1 = std::max(e1, e);
      v0 = std::min(v0, v);
      v1 = std::max(v1, v);
    }
  }
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](int e) { return e1 > e0 ? kLeft + pw * (e - e0) / (e1 - e0) : kLeft + pw / 2; };
  auto py = [&](double v) { return v1 > v0 ? kTop + ph * (1.0 - (v - v0) / (v1 - v0)) : kTop + ph / 2; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 6 << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
  os << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << kTop + ph / 2 << ")\">" << title << "</text>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\" font-size=\"10\">" << e0
     << "</text>\n";
  os << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\" font-size=\"10\">" << e1
     << "</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + ph << "\" text-anchor=\"end\" font-size=\"10\">"
     << fmt("%.4g", v0) << "</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
     << fmt("%.4g", v1) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto& [e, v] = series[i].points[k];
      os << (k ? " " : "") << fmt("%.2f", px(e)) << ',' << fmt("%.2f", py(v));
    }
    os << "\"/>\n";
    os << "<text x=\"" << kLeft + pw - 4 << "\" y=\"" << kTop + 12 + 14 * static_cast<double>(i)
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << series[i].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

bool higher_is_better(const std::string& key) { return key.find("acc") != std::string::npos; }

std::string render_report(const History& history, const std::string& source) {
  if (history.records.empty()) throw Error("empty history: nothing to report");

  std::vector<std::string> keys;
  std::vector<Mode> modes;
  std::set<int> epochs;
  for (const auto& r : history.records) {
    epochs.insert(r.epoch);
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
    for (const auto& [k, v] : r.values) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  if (keys.empty()) throw Error("empty history: no metric values");

  std::ostringstream md;
  md << "# Training report\n\n";
  md << "| field | value |\n|---|---|\n";
  md << "| source | `" << source << "` |\n";
  md << "| epochs | " << epochs.size() << " (" << *epochs.begin() << " to " << *epochs.rbegin() << ") |\n";
  md << "| modes |";
  for (std::size_t i = 0; i < modes.size(); ++i) md << (i ? ", " : " ") << mode_name(modes[i]);
  md << " |\n| metrics |";
  for (std::size_t i = 0; i < keys.size(); ++i) md << (i ? ", " : " ") << keys[i];
  md << " |\n\n";

  md << "## Best epochs\n\n| metric | mode | best epoch | value | goal |\n|---|---|---|---|---|\n";
  for (const auto& k : keys) {
    const bool up = higher_is_better(k);
    for (Mode m : modes) {
      const auto s = history.series(m, k);
      if (s.empty()) continue;
      auto best = s.begin();
      for (auto it = s.begin(); it != s.end(); ++it) {
        if (up ? it->second > best->second : it->second < best->second) best = it;
      }
      md << "| " << k << " | " << mode_name(m) << " | " << best->first << " | " << fmt("%.6g", best->second)
         << " | " << (up ? "max" : "min") << " |\n";
    }
  }

  for (const auto& k : keys) {
    md << "\n## " << k << "\n\n| epoch |";
    std::vector<Mode> present;
    for (Mode m : modes) {
      if (!history.series(m, k).empty()) present.push_back(m);
    }
    for (Mode m : present) md << ' ' << mode_name(m) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < present.size(); ++i) md << "---|";
    md << '\n';
    for (int e : epochs) {
      bool any = false;
      std::ostringstream row;
      row << "| " << e << " |";
      for (Mode m : present) {
        const auto v = history.value(e, m, k);
        any = any || v.has_value();
        row << ' ' << (v ? fmt("%.6g", *v) : std::string("")) << " |";
      }
      if (any) md << row.str() << '\n';
    }
    std::vector<ChartSeries> series;
    for (Mode m : present) series.push_back({mode_name(m), history.series(m, k)});
    md << '\n' << svg_chart(k, series);
  }
  return md.str();
}

void write_report(const std::filesystem::path& history_csv, const std::filesystem::path& out_md) {
  const std::string text = render_report(History::read_csv(history_csv), history_csv.string());
  std::ofstream out(out_md, std::ios::binary);
  if (!out) throw Error("cannot write " + out_md.string());
  out << text;
}

}  // namespace opflow
