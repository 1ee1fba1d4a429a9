/*
 * Copyright 2026 The friendlypool Authors.
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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace friendlypool {

struct PlotPoint {
  double x = 0;
  double y = 0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;
};

enum class PlotKind {
  scatter,       // every point drawn
  median_range,  // per x: median marker plus a min-max whisker
};

struct AxisSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  PlotKind kind = PlotKind::scatter;
  bool log_y = false;
};

/// Writes a self-contained SVG document.
void emit_plot(std::ostream& out, std::span<const PlotSeries> series, const AxisSpec& axes);

}  // namespace friendlypool
