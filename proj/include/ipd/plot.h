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

// SVG line charts from metrics rows: one line per (experiment, algorithm),
// mean across seeds with a shaded band of +-1 standard deviation. The
// standard deviation is the population one (divide by the number of seeds).

#ifndef IPD_PLOT_H_
#define IPD_PLOT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ipd/metrics.h"

namespace ipd {

enum class PlotAxis {
  kOuter,  // aggregate rows (inner == -1) against the phase / iteration
  kInner,  // per-round rows against the round, at one outer index
};

struct PlotSpec {
  std::vector<std::string> metrics;
  PlotAxis axis = PlotAxis::kOuter;
  // For kInner: the outer index to draw; -1 picks the largest present.
  std::int64_t outer = -1;
  int width = 640;
  int height = 400;
};

struct BandPoint {
  double x = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
  int n = 0;         // seeds contributing
};

struct Band {
  std::string label;  // "<experiment>/<algorithm>"
  std::vector<BandPoint> points;
};

// Mean and population std across seeds at every x. Throws ContractError if
// the metric has no rows for the requested axis.
std::vector<Band> ComputeBands(const std::vector<MetricsRow>& rows, const std::string& metric,
                               const PlotSpec& spec);

std::string RenderSvg(const std::vector<Band>& bands, const std::string& metric,
                      const PlotSpec& spec);

// Reads every CSV (schema errors name the offending columns), writes
// <out_dir>/<metric>.svg per requested metric and returns the paths.
std::vector<std::string> PlotMetrics(const std::vector<std::string>& csv_paths,
                                     const PlotSpec& spec, const std::string& out_dir);

}  // namespace ipd

#endif  // IPD_PLOT_H_
