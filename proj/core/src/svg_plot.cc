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

#include "friendlypool/svg_plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace friendlypool {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Scale {
  double lo, hi;
  bool log;
  double pixel_lo, pixel_hi;

  double operator()(double v) const {
    auto t = [&](double x) { return log ? std::log10(std::max(x, 1e-300)) : x; };
    const double span = t(hi) - t(lo);
    const double f = span == 0 ? 0.5 : (t(v) - t(lo)) / span;
    return pixel_lo + f * (pixel_hi - pixel_lo);
  }
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

void emit_plot(std::ostream& out, std::span<const PlotSeries> series, const AxisSpec& axes) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      if (!axes.log_y || p.y > 0) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = axes.log_y ? 1 : 0, ymax = 1;
  if (!axes.log_y) ymin = std::min(ymin, 0.0);
  if (xmin == xmax) xmin -= 1, xmax += 1;
  if (ymin == ymax) ymax = ymin + (axes.log_y ? ymin * 10 : 1);
  const double xpad = (xmax - xmin) * 0.05;
  xmin -= xpad;
  xmax += xpad;
  if (!axes.log_y) ymax += (ymax - ymin) * 0.05;

  const Scale sx{xmin, xmax, false, kLeft, kWidth - kRight};
  const Scale sy{ymin, ymax, axes.log_y, kHeight - kBottom, kTop};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(axes.title) << "</text>\n";

  // Axes and ticks.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = axes.log_y ? std::pow(10, std::log10(ymin) + (std::log10(ymax) - std::log10(ymin)) * i / 5.0)
                                 : ymin + (ymax - ymin) * i / 5.0;
    out << "<text x=\"" << sx(xv) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
        << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << sy(yv) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << sy(yv) << "\" stroke=\"#ddd\"/>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << escape(axes.x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << (kTop + kHeight - kBottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(axes.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kColours[i % std::size(kColours)];
    if (axes.kind == PlotKind::scatter) {
      for (const auto& p : s.points) {
        if (axes.log_y && p.y <= 0) continue;
        out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"3\" fill=\"" << colour
            << "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      std::map<double, std::vector<double>> by_x;
      for (const auto& p : s.points) by_x[p.x].push_back(p.y);
      std::string path;
      for (const auto& [x, ys] : by_x) {
        const double med = median_of(ys);
        const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
        if (ys.size() > 1 && *lo != *hi) {
          out << "<line x1=\"" << sx(x) << "\" y1=\"" << sy(*lo) << "\" x2=\"" << sx(x) << "\" y2=\""
              << sy(*hi) << "\" stroke=\"" << colour << "\"/>\n";
          for (double w : {*lo, *hi}) {
            out << "<line x1=\"" << sx(x) - 4 << "\" y1=\"" << sy(w) << "\" x2=\"" << sx(x) + 4
                << "\" y2=\"" << sy(w) << "\" stroke=\"" << colour << "\"/>\n";
          }
        }
        out << "<rect x=\"" << sx(x) - 3 << "\" y=\"" << sy(med) - 3
            << "\" width=\"6\" height=\"6\" fill=\"" << colour << "\"/>\n";
        path += (path.empty() ? "M" : " L") + num(sx(x)) + "," + num(sy(med));
      }
      if (by_x.size() > 1) {
        out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour << "\"/>\n";
      }
    }
    const double ly = kTop + 18.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
        << colour << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 28 << "\" y=\"" << ly + 9 << "\">" << escape(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace friendlypool
