// Copyright 2026 The sedgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Static SVG charts: grouped class-wise F1 bars and per-epoch curves.

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "sedgl/metrics.hpp"
#include "sedgl/trainer.hpp"

namespace sedgl::plot {

namespace detail {

inline const char* color(std::size_t i) {
  static const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
                                   "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};
  return kPalette[i % 10];
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

}  // namespace detail

/// One group of bars per class, one bar per report. Reports must share the
/// class list.
inline std::string classwise_f1_svg(const std::vector<ScoreReport>& reports, const std::string& title) {
  if (reports.empty()) throw ValidationError("no reports to plot");
  const auto& classes = reports.front().classes;
  for (const auto& r : reports)
    if (r.classes != classes) throw ValidationError("reports have different class lists");
  const double left = 50, top = 40, plot_h = 260, bottom = 110;
  const double group_w = std::max(40.0, 18.0 * reports.size() + 14), plot_w = group_w * (classes.size() + 1);
  const double width = left + plot_w + 150, height = top + plot_h + bottom;
  const double bar_w = (group_w - 14) / reports.size();
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) + "\" height=\"" +
                  detail::num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::num(left) + "\" y=\"20\" font-size=\"14\">" + detail::escape(title) + "</text>\n";
  for (int g = 0; g <= 5; ++g) {
    const double y = top + plot_h * (1 - g / 5.0);
    s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(y) + "\" x2=\"" + detail::num(left + plot_w) +
         "\" y2=\"" + detail::num(y) + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(y + 4) + "\" text-anchor=\"end\">" +
         detail::num(g / 5.0) + "</text>\n";
  }
  auto bar_group = [&](std::size_t slot, const std::string& label, auto value_of) {
    const double x0 = left + slot * group_w + 7;
    for (std::size_t r = 0; r < reports.size(); ++r) {
      const double v = std::clamp(value_of(reports[r]), 0.0, 1.0);
      const double h = plot_h * v;
      s += "<rect class=\"bar\" data-value=\"" + detail::num(v) + "\" x=\"" + detail::num(x0 + r * bar_w) +
           "\" y=\"" + detail::num(top + plot_h - h) + "\" width=\"" + detail::num(bar_w - 1) + "\" height=\"" +
           detail::num(h) + "\" fill=\"" + detail::color(r) + "\"/>\n";
    }
    const double cx = x0 + (group_w - 14) / 2, cy = top + plot_h + 12;
    s += "<text x=\"" + detail::num(cx) + "\" y=\"" + detail::num(cy) + "\" text-anchor=\"end\" transform=\"rotate(-45 " +
         detail::num(cx) + " " + detail::num(cy) + ")\">" + detail::escape(label) + "</text>\n";
  };
  for (std::size_t c = 0; c < classes.size(); ++c)
    bar_group(c, classes[c], [&](const ScoreReport& r) { return r.per_class[c].f1; });
  bar_group(classes.size(), "macro", [](const ScoreReport& r) { return r.macro_f1; });
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double y = top + 14 * r;
    s += "<rect x=\"" + detail::num(left + plot_w + 16) + "\" y=\"" + detail::num(y) +
         "\" width=\"10\" height=\"10\" fill=\"" + detail::color(r) + "\"/>\n";
    s += "<text x=\"" + detail::num(left + plot_w + 30) + "\" y=\"" + detail::num(y + 9) + "\">" +
         detail::escape(reports[r].variant) + "</text>\n";
  }
  return s + "</svg>\n";
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (epoch, value)
};

/// Line chart; the y range covers all series and includes 0.
inline std::string curves_svg(const std::vector<Series>& series, const std::string& title,
                              const std::string& y_label) {
  double xmax = 1, ymin = 0, ymax = 1e-12;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  const double left = 60, top = 40, w = 520, h = 280;
  auto px = [&](double x) { return left + w * (x - 1) / std::max(1.0, xmax - 1); };
  auto py = [&](double y) { return top + h * (1 - (y - ymin) / (ymax - ymin)); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"780\" height=\"370\" "
                  "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"60\" y=\"20\" font-size=\"14\">" + detail::escape(title) + "</text>\n";
  s += "<text x=\"14\" y=\"" + detail::num(top + h / 2) + "\" transform=\"rotate(-90 14 " + detail::num(top + h / 2) +
       ")\" text-anchor=\"middle\">" + detail::escape(y_label) + "</text>\n";
  for (int g = 0; g <= 4; ++g) {
    const double v = ymin + (ymax - ymin) * g / 4.0;
    s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(py(v)) + "\" x2=\"" + detail::num(left + w) +
         "\" y2=\"" + detail::num(py(v)) + "\" stroke=\"#ddd\"/>\n<text x=\"" + detail::num(left - 6) + "\" y=\"" +
         detail::num(py(v) + 4) + "\" text-anchor=\"end\">" + detail::num(v) + "</text>\n";
  }
  s += "<text x=\"" + detail::num(left + w / 2) + "\" y=\"" + detail::num(top + h + 30) +
       "\" text-anchor=\"middle\">epoch</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (auto [x, y] : series[i].points) pts += detail::num(px(x)) + "," + detail::num(py(y)) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + std::string(detail::color(i)) + "\" stroke-width=\"1.5\" points=\"" +
         pts + "\"/>\n";
    s += "<text x=\"" + detail::num(left + w + 12) + "\" y=\"" + detail::num(top + 14 * i + 9) + "\" fill=\"" +
         detail::color(i) + "\">" + detail::escape(series[i].name) + "</text>\n";
  }
  return s + "</svg>\n";
}

/// Validation curves (event F1 and clip F1 of the student) for several runs.
inline std::string history_svg(const std::vector<std::pair<std::string, std::vector<EpochRecord>>>& runs) {
  std::vector<Series> series;
  for (const auto& [name, hist] : runs) {
    Series ev{name + " event F1", {}}, cl{name + " clip F1", {}};
    for (const auto& r : hist) {
      ev.points.emplace_back(r.epoch, r.ps.event_f1);
      cl.points.emplace_back(r.epoch, r.ps.clip_f1);
    }
    series.push_back(std::move(ev));
    series.push_back(std::move(cl));
  }
  return curves_svg(series, "Validation F1 per epoch", "F1");
}

}  // namespace sedgl::plot
