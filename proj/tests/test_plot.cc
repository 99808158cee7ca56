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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ipd/error.h"
#include "ipd/plot.h"

namespace ipd {
namespace {

std::vector<MetricsRow> Seeds(const std::vector<double>& values) {
  std::vector<MetricsRow> rows;
  for (std::size_t s = 0; s < values.size(); ++s) {
    MetricsContext ctx{"mixed_training", "ppi", s + 1};
    rows.push_back(ctx.Row(0, -1, "m", values[s]));
    rows.push_back(ctx.Row(1, -1, "m", values[s] + 1.0));
  }
  return rows;
}

}  // namespace

TEST_CASE("bands use the population standard deviation") {
  PlotSpec spec;
  auto one = ComputeBands(Seeds({0.7}), "m", spec);
  REQUIRE(one.size() == 1);
  CHECK(one[0].points[0].std == 0.0);
  CHECK(one[0].points[0].mean == 0.7);

  auto two = ComputeBands(Seeds({0.4, 0.4}), "m", spec);
  CHECK(two[0].points[0].std == 0.0);
  CHECK(two[0].points[0].mean == 0.4);

  auto three = ComputeBands(Seeds({0.0, 1.0, 2.0}), "m", spec);
  CHECK(three[0].points[0].mean == 1.0);
  CHECK(three[0].points[0].std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(three[0].points[0].n == 3);
  CHECK(three[0].points[1].x == 1.0);
  CHECK_THROWS_AS(ComputeBands(Seeds({1.0}), "nope", spec), ContractError);
}

TEST_CASE("per-round axis picks one outer index") {
  MetricsContext ctx{"e", "a2c", 1};
  std::vector<MetricsRow> rows;
  for (int t = 0; t < 4; ++t) {
    rows.push_back(ctx.Row(2, t, "curve", 0.1 * t));
    rows.push_back(ctx.Row(5, t, "curve", 1.0));
  }
  PlotSpec spec;
  spec.axis = PlotAxis::kInner;
  auto last = ComputeBands(rows, "curve", spec);
  CHECK(last[0].points.size() == 4);
  CHECK(last[0].points[2].mean == 1.0);
  spec.outer = 2;
  CHECK(ComputeBands(rows, "curve", spec)[0].points[2].mean == doctest::Approx(0.2));
}

TEST_CASE("SVG output is deterministic and labeled") {
  PlotSpec spec;
  spec.metrics = {"m"};
  const auto rows = Seeds({0.0, 1.0, 2.0});
  const std::string a = RenderSvg(ComputeBands(rows, "m", spec), "m", spec);
  const std::string b = RenderSvg(ComputeBands(rows, "m", spec), "m", spec);
  CHECK(a == b);
  CHECK(a.find("<svg") == 0);
  CHECK(a.find("phase / iteration") != std::string::npos);
  CHECK(a.find("mixed_training/ppi") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "ipd_plot_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "metrics.csv").string();
  WriteMetricsCsv(csv, rows);
  auto written = PlotMetrics({csv}, spec, (dir / "svg").string());
  REQUIRE(written.size() == 1);
  std::ifstream in(written[0]);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == a);

  std::ofstream(dir / "bad.csv") << "experiment,algorithm,seed,round,inner,metric,value\n";
  CHECK_THROWS_AS(PlotMetrics({(dir / "bad.csv").string()}, spec, (dir / "svg").string()),
                  SchemaError);
  std::filesystem::remove_all(dir);
}

}  // namespace ipd
