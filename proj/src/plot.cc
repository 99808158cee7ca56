// Copyright 2026 The ipdsim Authors
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

#include "ipd/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ipd/error.h"

namespace ipd {

std::vector<Band> ComputeBands(const std::vector<MetricsRow>& rows, const std::string& metric,
                               const PlotSpec& spec) {
  std::int64_t outer = spec.outer;
  if (spec.axis == PlotAxis::kInner && outer < 0) {
    for (const auto& r : rows) {
      if (r.metric == metric && r.inner >= 0) outer = std::max(outer, r.outer);
    }
  }
  // label -> x -> seed -> value
  std::map<std::string, std::map<std::int64_t, std::map<std::uint64_t, double>>> acc;
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    std::int64_t x;
    if (spec.axis == PlotAxis::kOuter) {
      if (r.inner != -1) continue;
      x = r.outer;
    } else {
      if (r.inner < 0 || r.outer != outer) continue;
      x = r.inner;
    }
    acc[r.experiment + "/" + r.algorithm][x][r.seed] = r.value;
  }
  if (acc.empty()) {
    throw ContractError("no " + std::string(spec.axis == PlotAxis::kOuter ? "aggregate" : "per-round") +
                        " rows for metric '" + metric + "'");
  }
  std::vector<Band> out;
  for (const auto& [label, xs] : acc) {
    Band b;
    b.label = label;
    for (const auto& [x, seeds] : xs) {
      BandPoint p;
      p.x = static_cast<double>(x);
      p.n = static_cast<int>(seeds.size());
      for (const auto& [s, v] : seeds) p.mean += v;
      p.mean /= p.n;
      double ss = 0.0;
      for (const auto& [s, v] : seeds) ss += (v - p.mean) * (v - p.mean);
      p.std = std::sqrt(ss / p.n);
      b.points.push_back(p);
    }
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string RenderSvg(const std::vector<Band>& bands, const std::string& metric,
                      const PlotSpec& spec) {
  const double W = spec.width, H = spec.height;
  const double left = 70, right = 20, top = 40, bottom = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& b : bands) {
    for (const auto& p : b.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.mean - p.std);
      y1 = std::max(y1, p.mean + p.std);
    }
  }
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto sy = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
    << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << Num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">" << Escape(metric) << "</text>\n";
  // Axes and ticks.
  o << "<g stroke=\"black\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << Num(left) << "\" y1=\"" << Num(H - bottom) << "\" x2=\"" << Num(W - right)
    << "\" y2=\"" << Num(H - bottom) << "\"/>\n";
  o << "<line x1=\"" << Num(left) << "\" y1=\"" << Num(top) << "\" x2=\"" << Num(left)
    << "\" y2=\"" << Num(H - bottom) << "\"/>\n";
  o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    o << "<text x=\"" << Num(sx(xv)) << "\" y=\"" << Num(H - bottom + 16)
      << "\" text-anchor=\"middle\">" << Tick(xv) << "</text>\n";
    o << "<text x=\"" << Num(left - 6) << "\" y=\"" << Num(sy(yv) + 4)
      << "\" text-anchor=\"end\">" << Tick(yv) << "</text>\n";
  }
  o << "</g>\n";
  const char* xlabel = spec.axis == PlotAxis::kOuter ? "phase / iteration" : "round";
  o << "<text x=\"" << Num((left + W - right) / 2) << "\" y=\"" << Num(H - 12)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
    << "</text>\n";
  o << "<text transform=\"translate(16 " << Num((top + H - bottom) / 2)
    << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << "mean +- std across seeds</text>\n";

  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    const char* color = kColors[k % std::size(kColors)];
    o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : b.points) o << Num(sx(p.x)) << ',' << Num(sy(p.mean + p.std)) << ' ';
    for (auto it = b.points.rbegin(); it != b.points.rend(); ++it) {
      o << Num(sx(it->x)) << ',' << Num(sy(it->mean - it->std)) << ' ';
    }
    o << "\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : b.points) o << Num(sx(p.x)) << ',' << Num(sy(p.mean)) << ' ';
    o << "\"/>\n";
    const double ly = top + 14 + 16 * static_cast<double>(k);
    o << "<rect x=\"" << Num(W - right - 190) << "\" y=\"" << Num(ly - 9)
      << "\" width=\"12\" height=\"10\" fill=\"" << color << "\"/>\n";
    o << "<text x=\"" << Num(W - right - 172) << "\" y=\"" << Num(ly)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << Escape(b.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> PlotMetrics(const std::vector<std::string>& csv_paths,
                                     const PlotSpec& spec, const std::string& out_dir) {
  if (csv_paths.empty()) throw ContractError("plot needs at least one metrics CSV");
  if (spec.metrics.empty()) throw ContractError("plot needs at least one metric");
  std::vector<MetricsRow> rows;
  for (const auto& p : csv_paths) {
    auto r = ReadMetricsCsv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& m : spec.metrics) {
    const std::string svg = RenderSvg(ComputeBands(rows, m, spec), m, spec);
    const std::string path = (std::filesystem::path(out_dir) / (m + ".svg")).string();
    std::ofstream out(path, std::ios::trunc);
    out << svg;
    if (!out) throw IoError("cannot write '" + path + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace ipd
