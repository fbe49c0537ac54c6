// Copyright 2026 The uqtsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace uqtsc::cli {

namespace {

constexpr double kWidth = 480, kHeight = 360;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Plot area mapping for x in [x0, x1], y in [y0, y1].
struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void open(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
    << "</text>\n";
}

void axes(std::ostringstream& s, const Frame& f, const std::string& x_label, const std::string& y_label,
          int x_ticks, int y_ticks) {
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << num(f.px(f.x0)) << "\" y1=\"" << num(f.py(f.y0)) << "\" x2=\"" << num(f.px(f.x1))
    << "\" y2=\"" << num(f.py(f.y0)) << "\"/>\n";
  s << "<line x1=\"" << num(f.px(f.x0)) << "\" y1=\"" << num(f.py(f.y0)) << "\" x2=\"" << num(f.px(f.x0))
    << "\" y2=\"" << num(f.py(f.y1)) << "\"/>\n";
  s << "</g>\n";
  for (int i = 0; i <= x_ticks && x_ticks > 0; ++i) {
    const double v = f.x0 + (f.x1 - f.x0) * i / x_ticks;
    s << "<text x=\"" << num(f.px(v)) << "\" y=\"" << num(f.py(f.y0) + 15) << "\" text-anchor=\"middle\">" << num(v)
      << "</text>\n";
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double v = f.y0 + (f.y1 - f.y0) * i / y_ticks;
    s << "<text x=\"" << num(f.px(f.x0) - 5) << "\" y=\"" << num(f.py(v) + 4) << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  s << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 12)
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  s << "<text x=\"14\" y=\"" << num((kTop + kHeight - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num((kTop + kHeight - kBottom) / 2) << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& s, const std::vector<std::string>& labels, const std::vector<std::string>& colours) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 8 + 14 * static_cast<double>(i);
    s << "<rect x=\"" << num(kLeft + 10) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << colours[i] << "\"/>\n";
    s << "<text x=\"" << num(kLeft + 24) << "\" y=\"" << num(y + 1) << "\">" << escape(labels[i]) << "</text>\n";
  }
}

const char* colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

}  // namespace

std::string report_label(const EvalReport& report, std::size_t index) {
  std::string label = report.tag("uq").value_or("report " + std::to_string(index + 1));
  if (auto family = report.tag("family")) label = *family + "/" + label;
  return label;
}

std::string reliability_svg(const std::vector<EvalReport>& reports) {
  std::ostringstream s;
  open(s, "Reliability diagram");
  const Frame f;
  axes(s, f, "mean confidence (e_i)", "observed accuracy (o_i)", 5, 5);
  s << "<line x1=\"" << num(f.px(0)) << "\" y1=\"" << num(f.py(0)) << "\" x2=\"" << num(f.px(1)) << "\" y2=\""
    << num(f.py(1)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  std::vector<std::string> labels, colours;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    std::string points;
    for (const auto& b : reports[r].bins) {
      if (b.count == 0) continue;
      if (!points.empty()) points += ' ';
      points += num(f.px(b.confidence)) + "," + num(f.py(b.accuracy));
    }
    s << "<polyline fill=\"none\" stroke=\"" << colour(r) << "\" stroke-width=\"1.5\" points=\"" << points
      << "\"/>\n";
    labels.push_back(report_label(reports[r], r));
    colours.push_back(colour(r));
  }
  legend(s, labels, colours);
  s << "</svg>\n";
  return s.str();
}

std::string bar_svg(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values) {
  std::ostringstream s;
  open(s, title);
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  Frame f;
  f.y1 = top > 0.0 ? top * 1.1 : 1.0;
  axes(s, f, "", y_label, 0, 4);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(1, values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
    const double y = f.py(values[i]);
    s << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(slot * 0.7) << "\" height=\""
      << num(f.py(0) - y) << "\" fill=\"" << colour(i) << "\"/>\n";
    s << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << num(f.py(0) + 15) << "\" text-anchor=\"middle\">"
      << escape(labels[i]) << "</text>\n";
    s << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << num(y - 4) << "\" text-anchor=\"middle\">"
      << num(values[i]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string entropy_scatter_svg(const std::vector<EvalReport>& reports) {
  std::ostringstream s;
  open(s, "Predictive confidence versus entropy");
  Frame f;
  f.x1 = std::log(2.0);
  f.y0 = 0.5;
  axes(s, f, "predictive entropy (nats)", "probability of predicted class", 4, 5);
  for (const auto& r : reports) {
    for (const auto& row : r.samples) {
      const bool correct = row.outcome == Outcome::TP || row.outcome == Outcome::TN;
      s << "<circle cx=\"" << num(f.px(row.entropy)) << "\" cy=\"" << num(f.py(std::max(row.p0, row.p1)))
        << "\" r=\"2\" fill=\"" << (correct ? "#2ca02c" : "#d62728") << "\" fill-opacity=\"0.6\"/>\n";
    }
  }
  legend(s, {"correct (TP, TN)", "incorrect (FP, FN)"}, {"#2ca02c", "#d62728"});
  s << "</svg>\n";
  return s.str();
}

}  // namespace uqtsc::cli
