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

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "opflow/estimator.hpp"

namespace opflow {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<int, double>> points;
};

/// Standalone SVG line chart, one polyline per series, scaled to the data
/// range with labeled axes.
std::string svg_chart(const std::string& title, const std::vector<ChartSeries>& series);

/// Keys containing "acc" are maximized, everything else minimized.
bool higher_is_better(const std::string& key);

/// Markdown report: run metadata, best epoch per metric, and per metric a
/// table with one row per epoch followed by an inline chart. Throws on an
/// empty history.
std::string render_report(const History& history, const std::string& source);

void write_report(const std::filesystem::path& history_csv, const std::filesystem::path& out_md);

}  // namespace opflow
